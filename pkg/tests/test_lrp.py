import math

import numpy as np
import pytest

from longarm.exact import TinyGraph, connection_event, enumerate_probability
from longarm.kernel import KernelSpec, build_kernel
from longarm.lrp import (Cluster, EdgeMemo, PercolationConfig, _distinct_indices,
                         _shell_tables, boundary_stats_lrp, cluster_tail_slope,
                         cluster_until_level, estimate_gamma_lrp, estimate_pc,
                         explore_cluster, long_edge_event_lrp, one_arm_lrp,
                         restrict_cluster, truncated_cluster)


# ---------------------------------------------------------------- config

def test_config_validation(kernel_d1):
    with pytest.raises(ValueError):
        PercolationConfig(kernel=kernel_d1, p=-0.1, window=16)
    with pytest.raises(ValueError):
        PercolationConfig(kernel=kernel_d1, p=100.0, window=16)  # p D > 1
    with pytest.raises(ValueError):
        PercolationConfig(kernel=kernel_d1, p=1.0, window=0)
    cfg = PercolationConfig(kernel=kernel_d1, p=1.0, window=64)
    assert 0 <= cfg.margin < 64


def test_edge_memo_symmetric_key():
    memo = EdgeMemo()
    k1 = EdgeMemo.key((0, 1), (2, 3))
    k2 = EdgeMemo.key((2, 3), (0, 1))
    assert k1 == k2
    memo.record(k1, True)
    assert memo.peek(k2) is True
    assert memo.max_decisions_per_pair() == 1


def test_shell_tables_match_pmf(kernel_d1):
    p = 1.5
    counts, q, wmax = _shell_tables(kernel_d1, p, 16)
    for s in (1, 5, 16):
        assert wmax[s - 1] == pytest.approx(kernel_d1.pmf([s]))
        assert q[s - 1] == pytest.approx(min(1.0, p * kernel_d1.pmf([s])))
        assert counts[s - 1] == 2  # d = 1 shells have two sites


def test_distinct_indices(rng):
    for n, k in ((10, 3), (5, 5), (4, 9)):
        got = _distinct_indices(rng, n, k)
        assert len(got) == min(n, k)
        assert len(set(got)) == len(got)
        assert all(0 <= i < n for i in got)


# ------------------------------------------------- exactness of thinning

def _tiny_enumeration(kernel, p):
    """Exact edge model on the 3 vertices of Q_1 in d = 1."""
    d1 = p * kernel.pmf([1])
    d2 = p * kernel.pmf([2])
    # vertices -1, 0, 1 -> 0, 1, 2
    return TinyGraph(n_vertices=3, edges=[(0, 1, d1), (1, 2, d1), (0, 2, d2)])


def test_exploration_matches_exact_enumeration(kernel_d1, rng):
    """The lazy thinning reproduces the product edge law exactly."""
    p = 1.5
    g = _tiny_enumeration(kernel_d1, p)
    c01 = connection_event(g, 1, 2)       # origin to +1
    call = connection_event(g, 0, 1)
    want_all = enumerate_probability(
        g, lambda oe: call(oe) and c01(oe))  # all three connected
    want_right = enumerate_probability(g, c01)

    cfg = PercolationConfig(kernel=kernel_d1, p=p, window=1)
    n = 60000
    got_all = got_right = 0
    for _ in range(n):
        cl = explore_cluster(cfg, (0,), 10, rng)
        got_all += len(cl) == 3
        got_right += (1,) in cl.vertices
    for got, want in ((got_all, want_all), (got_right, want_right)):
        se = math.sqrt(want * (1 - want) / n)
        assert abs(got / n - want) < 4 * se


def test_exploration_decides_each_pair_once(kernel_d1, rng):
    cfg = PercolationConfig(kernel=kernel_d1, p=2.0, window=32)
    for _ in range(50):
        memo = EdgeMemo()
        explore_cluster(cfg, (0,), 200, rng, memo=memo)
        assert memo.max_decisions_per_pair() <= 1


def test_exploration_stays_in_window(kernel_d1, rng):
    cfg = PercolationConfig(kernel=kernel_d1, p=2.5, window=16)
    for _ in range(100):
        cl = explore_cluster(cfg, (0,), 500, rng)
        assert cl.max_norm() <= 16
        if cl.max_norm() > 16 - cfg.margin:
            assert cl.hit_window_boundary


def test_exploration_vertex_cap(kernel_d1, rng):
    cfg = PercolationConfig(kernel=kernel_d1, p=4.0, window=64)
    seen_trunc = False
    for _ in range(50):
        cl = explore_cluster(cfg, (0,), 10, rng)
        assert len(cl) <= 10
        seen_trunc |= cl.exploration_truncated
    assert seen_trunc


def test_truncated_cluster_edge_lengths(kernel_d1, rng):
    cfg = PercolationConfig(kernel=kernel_d1, p=3.0, window=32)
    for _ in range(50):
        cl = truncated_cluster(cfg, (0,), ell=3, rng=rng)
        for u, v in cl.edges:
            assert abs(u[0] - v[0]) < 3


def test_cluster_until_level_confined(kernel_d1, rng):
    cfg = PercolationConfig(kernel=kernel_d1, p=3.0, window=32)
    for _ in range(50):
        cl = cluster_until_level(cfg, 5, rng)
        assert cl.max_norm() <= 5


def test_restrict_cluster_is_origin_component(kernel_d1, rng):
    cfg = PercolationConfig(kernel=kernel_d1, p=3.0, window=32)
    for _ in range(30):
        full = explore_cluster(cfg, (0,), 2000, rng)
        sub = restrict_cluster(full, lambda e: abs(e[0][0] - e[1][0]) < 2)
        assert sub.vertices <= full.vertices
        assert (0,) in sub.vertices
        for u, v in sub.edges:
            assert abs(u[0] - v[0]) < 2
        # restricting by nothing reproduces the cluster
        same = restrict_cluster(full, lambda e: True)
        assert same.vertices == full.vertices


# ---------------------------------------------------------------- events

def _manual_cluster(vertices, boundary=False, truncated=False):
    return Cluster(vertices=set(vertices), edges=[],
                   hit_window_boundary=boundary,
                   exploration_truncated=truncated, origin=(0,))


def test_one_arm_outcomes():
    inside = _manual_cluster([(0,), (2,)])
    assert not one_arm_lrp(inside, 2).hit
    out = one_arm_lrp(inside, 1)
    assert out.hit and not out.indeterminate
    flagged = _manual_cluster([(0,)], boundary=True)
    out = one_arm_lrp(flagged, 2)
    assert out.hit and out.indeterminate
    capped = _manual_cluster([(0,)], truncated=True)
    assert one_arm_lrp(capped, 2).indeterminate
    with pytest.raises(ValueError):
        one_arm_lrp(inside, -1)


def test_long_edge_event():
    cl = Cluster(vertices={(0,), (5,)}, edges=[((0,), (5,))],
                 hit_window_boundary=False, exploration_truncated=False,
                 origin=(0,))
    assert long_edge_event_lrp(cl, 5)
    assert not long_edge_event_lrp(cl, 6)


def test_boundary_stats_lrp_runs(kernel_d1, rng):
    cfg = PercolationConfig(kernel=kernel_d1, p=3.0, window=64)
    st = boundary_stats_lrp(cfg, j=16, w=4, big_l=8, rng=rng)
    assert st.x_count >= 0 and st.a_count >= 0
    with pytest.raises(ValueError):
        boundary_stats_lrp(cfg, j=60, w=4, big_l=8, rng=rng)


# ------------------------------------------------------------ estimation

def test_estimate_gamma_lrp_nested_and_flagged(kernel_d1):
    table = estimate_gamma_lrp(kernel_d1, 2.5, [2, 4, 8], window=32,
                               samples=3000, seed=5)
    g = [row.gamma_hat for row in table.rows]
    assert g[0] >= g[1] >= g[2]
    for row in table.rows:
        assert row.indeterminate_fraction is not None
        assert 0.0 <= row.indeterminate_fraction <= 1.0
    assert "indeterminate_fraction" in table.to_csv().split("\n")[0]


def test_estimate_gamma_lrp_radius_window_guard(kernel_d1):
    with pytest.raises(ValueError):
        estimate_gamma_lrp(kernel_d1, 1.0, [16], window=32, samples=10)


def test_estimate_gamma_lrp_deterministic_across_workers(kernel_d1):
    a = estimate_gamma_lrp(kernel_d1, 2.0, [2, 4], window=32, samples=1200,
                           seed=9, workers=1)
    b = estimate_gamma_lrp(kernel_d1, 2.0, [2, 4], window=32, samples=1200,
                           seed=9, workers=2)
    assert a.to_csv() == b.to_csv()


def test_cluster_tail_slope_decreasing_in_p(kernel_d1):
    """Subcritical p gives a steeper size tail than near-critical p."""
    grid = [2, 4, 8, 16]
    lo = cluster_tail_slope(kernel_d1, 0.8, 64, grid, samples=3000, seed=1,
                            vertex_cap=200)
    hi = cluster_tail_slope(kernel_d1, 3.5, 64, grid, samples=3000, seed=1,
                            vertex_cap=200)
    assert lo is None or hi is None or lo.slope < hi.slope


def test_estimate_pc_smoke(kernel_d1):
    """Bisection returns a p_c inside the admissible range (heuristic
    regime here, so only coarse properties are asserted)."""
    with pytest.warns(UserWarning):
        out = estimate_pc(kernel_d1, window=16, n_grid=[2, 4, 8, 16],
                          samples=400, iters=5, vertex_cap=64,
                          halve_window=False)
    assert 0.0 < out["p_c"] < 1.0 / kernel_d1.max_pmf()
    assert out["window"] == 16
