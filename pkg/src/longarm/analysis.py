"""Exponent formulas, constraint arithmetic, and estimation utilities.

Pure functions: the one-arm exponent rho = min{4, alpha}/2, the ersatz
percolation exponent xi, the admissible interval for the technical
exponent beta, derived scale parameters for the annulus decomposition,
Wilson confidence intervals, and weighted log-log fits.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np


def _check_alpha(alpha: float) -> None:
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if alpha == 2:
        raise ValueError("alpha = 2 is not supported")


def rho_exponent(alpha: float) -> float:
    _check_alpha(alpha)
    return min(4.0, alpha) / 2.0


def xi_exponent(alpha: float) -> float:
    _check_alpha(alpha)
    if math.isinf(alpha):
        return 0.4
    return min(alpha / (2.0 * alpha + 2.0), 0.4)


@dataclass(frozen=True)
class ExponentSet:
    alpha: float
    rho: float
    xi: float
    beta_lo: float
    beta_hi: float


def exponents(alpha: float) -> ExponentSet:
    """All derived exponents and the admissible beta interval."""
    _check_alpha(alpha)
    rho = rho_exponent(alpha)
    xi = xi_exponent(alpha)
    beta_lo = 11.0 / (10.0 * min(4.0, alpha))
    beta_hi = (alpha + 1.0) / alpha ** 2 if alpha <= 4 else 5.0 / 16.0
    return ExponentSet(alpha=alpha, rho=rho, xi=xi, beta_lo=beta_lo, beta_hi=beta_hi)


def beta_constraints_hold(alpha: float, beta: float) -> tuple[bool, dict[str, bool]]:
    """Evaluate the three technical constraint chains on beta.

    Returns (all hold, per-constraint truth values).
    """
    es = exponents(alpha)
    rho, xi = es.rho, es.xi
    c1 = -(min(beta, 1.0 / (2.0 * rho))) < 1.0 - 2.0 * beta * rho < 0.0
    c2 = 2.0 * beta * rho > 11.0 / 10.0
    c3 = -1.0 < beta * (xi - rho) < 0.0
    report = {"sandwich": c1, "kolmogorov": c2, "ersatz": c3}
    return c1 and c2 and c3, report


def derived_scales(epsilon: float, r: int, lambda_: float, alpha: float,
                   beta: float) -> dict:
    """Scales for the annulus decomposition of the one-arm upper bound.

    delta = eps^(1/(2 rho)), L = eps^beta * r, N = lambda / (4 (eps^beta + delta)),
    and the annulus anchors j_i = r + lambda r / 4 + i (L + delta r).
    """
    if not (0.0 < epsilon < 1.0):
        raise ValueError("epsilon must lie in (0, 1)")
    if not (0.0 < lambda_ <= 1.0):
        raise ValueError("lambda must lie in (0, 1]")
    if r < 1:
        raise ValueError("r must be >= 1")
    rho = rho_exponent(alpha)
    delta = epsilon ** (1.0 / (2.0 * rho))
    big_l = epsilon ** beta * r
    n_annuli = lambda_ / (4.0 * (epsilon ** beta + delta))
    j_list = [r + lambda_ * r / 4.0 + i * (big_l + delta * r)
              for i in range(1, int(math.floor(n_annuli)) + 1)]
    lo, hi = r * (1.0 + lambda_ / 4.0), r * (1.0 + lambda_ / 2.0)
    for j in j_list:
        assert lo <= j <= hi * (1 + 1e-12), "annulus anchor escaped its band"
    return {"delta": delta, "L": big_l, "N": n_annuli, "j_list": j_list}


def wilson_ci(hits: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if not (0 <= hits <= trials) or trials < 1:
        raise ValueError("need 0 <= hits <= trials, trials >= 1")
    from scipy.stats import norm as _norm
    z = float(_norm.ppf(0.5 + level / 2.0))
    phat = hits / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    slope_stderr: float
    r_squared: float
    weights: np.ndarray


def loglog_fit(points) -> FitResult:
    """Weighted least squares of log(value) against log(r).

    `points` is a sequence of (r, value) or (r, value, stderr); stderr is
    propagated to the log scale as stderr / value.
    """
    pts = [tuple(p) for p in points]
    if len(pts) < 3:
        raise ValueError("need at least 3 points")
    r = np.array([p[0] for p in pts], dtype=float)
    v = np.array([p[1] for p in pts], dtype=float)
    if np.any(r <= 0) or np.any(v <= 0):
        raise ValueError("log-log fit requires positive abscissae and values")
    if len(np.unique(r)) < 3:
        raise ValueError("need at least 3 distinct abscissae")
    se = np.array([p[2] if len(p) > 2 else 0.0 for p in pts], dtype=float)
    log_se = np.where(se > 0, se / v, 0.0)
    with np.errstate(divide="ignore"):
        w = np.where(log_se > 0, 1.0 / np.square(log_se, where=log_se > 0,
                                                 out=np.ones_like(log_se)), 1.0)
    if np.any(log_se > 0) and np.any(log_se == 0):
        w[log_se == 0] = np.max(w[log_se > 0])
    x, y = np.log(r), np.log(v)
    sw = w.sum()
    xbar, ybar = np.dot(w, x) / sw, np.dot(w, y) / sw
    sxx = np.dot(w, (x - xbar) ** 2)
    slope = np.dot(w, (x - xbar) * (y - ybar)) / sxx
    intercept = ybar - slope * xbar
    resid = y - (intercept + slope * x)
    dof = max(len(pts) - 2, 1)
    s2 = np.dot(w, resid ** 2) / dof
    slope_stderr = math.sqrt(s2 / sxx)
    syy = np.dot(w, (y - ybar) ** 2)
    r_squared = 1.0 - np.dot(w, resid ** 2) / syy if syy > 0 else 1.0
    return FitResult(slope=float(slope), intercept=float(intercept),
                     slope_stderr=float(slope_stderr), r_squared=float(r_squared),
                     weights=w)


# ------------------------------------------------------------- estimates

@dataclass
class EstimateRow:
    r: int
    hits: int
    trials: int
    gamma_hat: float
    ci_lo: float
    ci_hi: float
    cap: int
    cap_tail_bound: float
    indeterminate_fraction: float | None = None


@dataclass
class EstimateTable:
    """Per-radius one-arm tallies plus the fitted exponent."""

    rows: list

    def fit(self, min_hits: int = 10) -> FitResult:
        """Exponent fit over rows with enough hits for a stable log value."""
        pts = []
        for row in self.rows:
            if row.hits >= min_hits:
                se = (row.ci_hi - row.ci_lo) / (2 * 1.959964)
                pts.append((row.r, row.gamma_hat, se))
        return loglog_fit(pts)

    def to_csv(self) -> str:
        with_ind = any(r.indeterminate_fraction is not None for r in self.rows)
        buf = io.StringIO()
        cols = ["r", "hits", "trials", "gamma_hat", "ci_lo", "ci_hi", "cap",
                "cap_tail_bound"]
        if with_ind:
            cols.append("indeterminate_fraction")
        buf.write(",".join(cols) + "\n")
        for row in self.rows:
            vals = [str(row.r), str(row.hits), str(row.trials),
                    repr(row.gamma_hat), repr(row.ci_lo), repr(row.ci_hi),
                    str(row.cap), repr(row.cap_tail_bound)]
            if with_ind:
                vals.append(repr(row.indeterminate_fraction
                                 if row.indeterminate_fraction is not None else 0.0))
            buf.write(",".join(vals) + "\n")
        return buf.getvalue()
