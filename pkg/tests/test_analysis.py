import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from longarm.analysis import (EstimateRow, EstimateTable, beta_constraints_hold,
                              derived_scales, exponents, loglog_fit,
                              rho_exponent, wilson_ci, xi_exponent)

alphas = st.one_of(
    st.floats(0.05, 1.95, allow_nan=False),
    st.floats(2.05, 40.0, allow_nan=False),
    st.just(math.inf),
)


def test_alpha_guards():
    for bad in (0.0, -1.0, 2.0):
        with pytest.raises(ValueError):
            exponents(bad)


@given(alphas)
def test_rho_formula(alpha):
    assert rho_exponent(alpha) == min(4.0, alpha) / 2.0


@given(alphas)
def test_xi_formula(alpha):
    xi = xi_exponent(alpha)
    if math.isinf(alpha):
        assert xi == 0.4
    else:
        assert xi == min(alpha / (2 * alpha + 2), 0.4)
    assert xi <= rho_exponent(alpha)


def test_known_exponent_values():
    assert rho_exponent(0.8) == pytest.approx(0.4)
    assert rho_exponent(5.0) == pytest.approx(2.0)
    assert rho_exponent(6.0) == pytest.approx(2.0)
    assert xi_exponent(0.8) == pytest.approx(0.8 / 3.6)
    assert xi_exponent(8.0) == pytest.approx(0.4)


@given(st.floats(0.05, 1.95) | st.floats(2.05, 12.0))
@settings(max_examples=200)
def test_beta_interval_midpoint_satisfies_constraints(alpha):
    es = exponents(alpha)
    if es.beta_lo < es.beta_hi:
        beta = 0.5 * (es.beta_lo + es.beta_hi)
        ok, report = beta_constraints_hold(alpha, beta)
        assert ok, (alpha, beta, report)


def test_beta_outside_interval_fails():
    es = exponents(0.8)
    ok_low, _ = beta_constraints_hold(0.8, es.beta_lo * 0.9)
    ok_high, _ = beta_constraints_hold(0.8, es.beta_hi * 1.2)
    assert not ok_low
    assert not ok_high


def test_derived_scales_band():
    out = derived_scales(epsilon=1e-4, r=1000, lambda_=1.0, alpha=0.8, beta=1.6)
    assert 0 < out["delta"] < 1
    assert out["N"] >= 1
    for j in out["j_list"]:
        assert 1250.0 <= j <= 1500.0 + 1e-9
    with pytest.raises(ValueError):
        derived_scales(epsilon=1.5, r=10, lambda_=1.0, alpha=0.8, beta=1.6)
    with pytest.raises(ValueError):
        derived_scales(epsilon=0.1, r=10, lambda_=2.0, alpha=0.8, beta=1.6)


# -------------------------------------------------------------- wilson ci

@given(st.integers(1, 5000), st.integers(0, 5000))
@settings(max_examples=100)
def test_wilson_ci_brackets_phat(trials, hits):
    hits = min(hits, trials)
    lo, hi = wilson_ci(hits, trials)
    phat = hits / trials
    assert 0.0 <= lo <= phat + 1e-12
    assert phat - 1e-12 <= hi <= 1.0


def test_wilson_ci_coverage(rng):
    """~95% of intervals contain the true p."""
    p, n, reps = 0.3, 400, 2000
    cover = 0
    hits = rng.binomial(n, p, size=reps)
    for h in hits:
        lo, hi = wilson_ci(int(h), n)
        cover += lo <= p <= hi
    assert 0.93 < cover / reps < 0.97


# ---------------------------------------------------------------- fitting

def test_loglog_fit_recovers_exact_power_law():
    pts = [(r, 3.0 * r ** -1.25) for r in (2, 4, 8, 16, 32)]
    fit = loglog_fit(pts)
    assert fit.slope == pytest.approx(-1.25, abs=1e-12)
    assert math.exp(fit.intercept) == pytest.approx(3.0, rel=1e-12)
    assert fit.r_squared == pytest.approx(1.0)


def test_loglog_fit_weighting_prefers_precise_points():
    # a noisy outlier with a huge stderr should barely move the slope
    pts = [(2, 4.0, 0.001), (4, 2.0, 0.001), (8, 1.0, 0.001), (16, 5.0, 10.0)]
    fit = loglog_fit(pts)
    assert fit.slope == pytest.approx(-1.0, abs=0.02)


def test_loglog_fit_noise_consistency(rng):
    """Fitted slope lies within a few stderr of the truth."""
    rs = np.array([4, 8, 16, 32, 64, 128])
    true = rs.astype(float) ** -0.4
    se = 0.03 * true
    vals = true * np.exp(rng.normal(0, 0.03, size=len(rs)))
    fit = loglog_fit(list(zip(rs, vals, se)))
    assert abs(fit.slope + 0.4) < 4 * fit.slope_stderr


def test_loglog_fit_validation():
    with pytest.raises(ValueError):
        loglog_fit([(1, 1.0), (2, 0.5)])
    with pytest.raises(ValueError):
        loglog_fit([(1, 1.0), (1, 0.9), (1, 0.8)])
    with pytest.raises(ValueError):
        loglog_fit([(1, 1.0), (2, -0.5), (3, 0.2)])


# ---------------------------------------------------------------- tables

def _row(r, hits, trials):
    g = hits / trials
    lo, hi = wilson_ci(hits, trials)
    return EstimateRow(r=r, hits=hits, trials=trials, gamma_hat=g,
                       ci_lo=lo, ci_hi=hi, cap=1000, cap_tail_bound=1e-3)


def test_estimate_table_csv_roundtrip_precision():
    table = EstimateTable(rows=[_row(8, 317, 1000), _row(16, 201, 1000),
                                _row(32, 144, 1000)])
    text = table.to_csv()
    lines = text.strip().split("\n")
    assert lines[0].split(",")[:4] == ["r", "hits", "trials", "gamma_hat"]
    cells = lines[1].split(",")
    assert float(cells[3]) == table.rows[0].gamma_hat  # repr round-trips

    fit = table.fit()
    direct = loglog_fit([(row.r, row.gamma_hat,
                          (row.ci_hi - row.ci_lo) / (2 * 1.959964))
                         for row in table.rows])
    assert fit.slope == direct.slope


def test_estimate_table_csv_indeterminate_column():
    row = _row(8, 100, 1000)
    row.indeterminate_fraction = 0.02
    text = EstimateTable(rows=[row]).to_csv()
    assert "indeterminate_fraction" in text.split("\n")[0]


def test_estimate_table_fit_skips_sparse_rows():
    rows = [_row(8, 300, 1000), _row(16, 200, 1000), _row(32, 120, 1000),
            _row(64, 3, 1000)]
    table = EstimateTable(rows=rows)
    fit = table.fit(min_hits=10)
    kept = loglog_fit([(row.r, row.gamma_hat,
                        (row.ci_hi - row.ci_lo) / (2 * 1.959964))
                       for row in rows[:3]])
    assert fit.slope == kept.slope
