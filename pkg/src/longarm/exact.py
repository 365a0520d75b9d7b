"""Independent exact oracles for the stochastic estimators.

Windowed lattice convolution powers with an escape-mass ledger, the
random-walk Green's function with a geometric residual estimate, the BRW
one-arm probability as a monotone fixed point, a brute-force total
progeny recursion, and exhaustive enumeration of small percolation
instances with a disjoint-occurrence (BK) checker.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.signal import fftconvolve

from .gw import OffspringDist
from .kernel import Kernel


# ------------------------------------------------------------- fields

@dataclass
class LatticeField:
    """A dense real field on the cube window Q_R with an escape ledger."""

    R: int
    values: np.ndarray          # shape (2R+1,)*d
    mass_outside: float

    @property
    def d(self) -> int:
        return self.values.ndim

    def __getitem__(self, x) -> float:
        idx = tuple(int(c) + self.R for c in np.atleast_1d(x))
        return float(self.values[idx])

    def total(self) -> float:
        return float(self.values.sum())


def _grid_offsets(d: int, R: int) -> np.ndarray:
    """All points of Q_R as an ((2R+1)^d, d) array in C order."""
    axes = np.meshgrid(*[np.arange(-R, R + 1)] * d, indexing="ij")
    return np.stack([a.ravel() for a in axes], axis=1)


def kernel_window(kernel: Kernel, R: int) -> np.ndarray:
    """The step pmf as a dense array over Q_R."""
    d = kernel.d
    vals = kernel.pmf_array(_grid_offsets(d, R)).reshape((2 * R + 1,) * d)
    return vals


def _windowed_convolve(a: np.ndarray, ker: np.ndarray, R: int) -> np.ndarray:
    """Linear (non-periodic) convolution of two Q_R fields, cropped to Q_R."""
    full = fftconvolve(a, ker)
    w = 2 * R + 1
    center = tuple(slice((s - w) // 2, (s - w) // 2 + w) for s in full.shape)
    out = full[center]
    # FFT round-off can produce tiny negatives in exact-zero regions
    return np.where(out < 0, 0.0, out)


def convolve_power(kernel: Kernel, n: int, R: int) -> LatticeField:
    """D^{*n} restricted to Q_R; mass_outside tracks everything escaped."""
    if n < 0 or R < 1:
        raise ValueError("need n >= 0 and R >= 1")
    d = kernel.d
    out = np.zeros((2 * R + 1,) * d)
    out[(R,) * d] = 1.0
    if n == 0:
        return LatticeField(R=R, values=out, mass_outside=0.0)
    ker = kernel_window(kernel, R)
    for _ in range(n):
        out = _windowed_convolve(out, ker, R)
    return LatticeField(R=R, values=out, mass_outside=1.0 - float(out.sum()))


@dataclass
class GreenResult:
    field: LatticeField         # G_N on Q_R
    N: int
    residual: float             # geometric estimate of the dropped tail at 0
    origin_blocks: list         # doubling-block sums of D^{*n}(0) (diagnostic)


def green_function(kernel: Kernel, N: int, R: int, pad: int = 0) -> GreenResult:
    """G_N = sum_{n<=N} D^{*n} on Q_R with a geometric residual estimate.

    Requires transience d > min(2, alpha); the residual is extrapolated
    from the last two doubling blocks of the return mass D^{*n}(0).

    `pad` enlarges the internal computation window to Q_{R+pad} before
    the final crop to Q_R. With pad = 0 walks that leave Q_R never
    re-enter, which underestimates G when the step tail is heavy (the
    escaped mass is reported in the ledger either way); a pad of the
    order of the N-step spread N^{1/min(2, alpha)} makes the loss
    negligible. When N is a power of two the sum is built by doubling
    (S_2N = S_N + D^{*N} * S_N), otherwise step by step.
    """
    spec = kernel.spec
    if spec.d <= min(2.0, spec.alpha):
        raise ValueError(
            f"Green's function needs the transient regime d > min(2, alpha); "
            f"got d={spec.d}, alpha={spec.alpha}")
    if N < 1 or R < 1 or pad < 0:
        raise ValueError("need N >= 1, R >= 1, pad >= 0")
    d = spec.d
    Ri = R + pad
    origin = (Ri,) * d
    ker = kernel_window(kernel, Ri)
    blocks = []
    if N >= 4 and N & (N - 1) == 0:
        # doubling: S_N = sum_{n < N} D^{*n}, P_N = D^{*N}
        s = np.zeros((2 * Ri + 1,) * d)
        s[origin] = 1.0
        s = s + ker                       # S_2
        p = _windowed_convolve(ker, ker, Ri)   # P_2
        blocks.append(float(ker[origin]) + float(p[origin]))
        m = 2
        while m < N:
            inc = _windowed_convolve(s, p, Ri)   # sum_{n=m}^{2m-1} D^{*n}
            s = s + inc
            p = _windowed_convolve(p, p, Ri)
            blocks.append(float(inc[origin]))
            m *= 2
        g = s + p                         # G_N = S_N + D^{*N}
    else:
        cur = np.zeros((2 * Ri + 1,) * d)
        cur[origin] = 1.0
        g = cur.copy()
        block_sum = 0.0
        next_edge = 1
        for n in range(1, N + 1):
            cur = _windowed_convolve(cur, ker, Ri)
            g += cur
            block_sum += float(cur[origin])
            if n == next_edge:
                blocks.append(block_sum)
                block_sum = 0.0
                next_edge *= 2
        if block_sum > 0:
            blocks.append(block_sum)
    residual = 0.0
    if len(blocks) >= 2 and blocks[-2] > 0:
        q = blocks[-1] / blocks[-2]
        if 0 < q < 1:
            residual = blocks[-1] * q / (1.0 - q)
    escaped = float(N + 1 - g.sum())
    if pad > 0:
        sl = tuple(slice(pad, pad + 2 * R + 1) for _ in range(d))
        g = np.ascontiguousarray(g[sl])
    return GreenResult(field=LatticeField(R=R, values=g, mass_outside=escaped),
                       N=N, residual=residual, origin_blocks=blocks)


# ----------------------------------------------------- BRW fixed point

def brw_one_arm_oracle(off: OffspringDist, kernel: Kernel, r: int, R: int,
                       tol: float = 1e-12, variant: str = "hit",
                       max_iter: int = 200000) -> float:
    """One-arm probability of the Q_R-killed BRW by monotone fixed point.

    The field u(x), x in Q_r, is the probability that the subtree rooted
    at a particle at x ever places a particle outside Q_r. Children
    landing in Q_R \\ Q_r are immediate hits; children escaping Q_R are
    credited as hits (variant="hit", which makes the answer the exact
    gamma(r), independent of R) or as misses (variant="miss", a lower
    bound approaching gamma(r) as R grows).
    """
    if not (0 <= r < R):
        raise ValueError("need 0 <= r < R")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if variant not in ("hit", "miss"):
        raise ValueError(f"unknown variant {variant!r}")
    d = kernel.d
    ker2r = kernel_window(kernel, 2 * r) if r > 0 else kernel_window(kernel, 0)
    ker_flip = np.flip(ker2r)
    extra = np.zeros((2 * r + 1,) * d)
    if variant == "miss":
        # per-site mass escaping Q_R, credited as miss (adds to no-hit prob)
        big = kernel_window(kernel, R + r)
        ones_R = np.ones((2 * R + 1,) * d)
        in_mass = fftconvolve(ones_R, np.flip(big))
        w = 2 * r + 1
        center = tuple(slice((s - w) // 2, (s - w) // 2 + w) for s in in_mass.shape)
        extra = np.clip(1.0 - in_mass[center], 0.0, 1.0)
    u = np.zeros((2 * r + 1,) * d)
    for _ in range(max_iter):
        if r > 0:
            z = fftconvolve(1.0 - u, ker_flip, mode="same")
        else:
            z = (1.0 - u) * ker2r
        z = np.clip(z + extra, 0.0, 1.0)
        new_u = 1.0 - off.pgf(z)
        assert np.all(new_u >= u - 1e-9), "fixed-point iteration lost monotonicity"
        delta = float(np.max(np.abs(new_u - u)))
        u = new_u
        if delta < tol:
            return float(u[(r,) * d])
    raise RuntimeError(f"fixed point did not converge within {max_iter} iterations")


# ----------------------------------------------------- progeny brute force

def progeny_brute_force(off: OffspringDist, n_max: int) -> np.ndarray:
    """P(|T| = n) for n = 1..n_max by explicit composition enumeration.

    Independent of the Otter-Dwass convolution route: recurses on the
    root's offspring count and all ordered splits of the remaining mass.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    p = np.asarray(off.probs, dtype=float)

    @lru_cache(maxsize=None)
    def q(n: int) -> float:
        if n < 1:
            return 0.0
        total = p[0] if n == 1 else 0.0
        for k in range(1, min(len(p) - 1, n - 1) + 1):
            if p[k] == 0:
                continue
            s = 0.0
            for split in _compositions(n - 1, k):
                prod = 1.0
                for part in split:
                    prod *= q(part)
                s += prod
            total += p[k] * s
        return total

    return np.array([q(n) for n in range(1, n_max + 1)])


def _compositions(total: int, parts: int):
    """All ordered splits of `total` into `parts` positive integers."""
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


# ----------------------------------------------------- tiny enumeration

@dataclass
class TinyGraph:
    """A small weighted graph for exhaustive percolation enumeration."""

    n_vertices: int
    edges: list                  # [(u, v, prob)], simple, u != v

    def __post_init__(self):
        if self.n_vertices > 16:
            raise ValueError("TinyGraph supports at most 16 vertices")
        if len(self.edges) > 24:
            raise ValueError("TinyGraph supports at most 24 edges")
        seen = set()
        for u, v, q in self.edges:
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise ValueError("edge endpoint out of range")
            if u == v:
                raise ValueError("self-loops are not allowed")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError("parallel edges are not allowed")
            seen.add(key)
            if not (0.0 <= q <= 1.0):
                raise ValueError("edge probability must lie in [0, 1]")

    def config_prob(self, mask: int) -> float:
        prob = 1.0
        for i, (_, _, q) in enumerate(self.edges):
            prob *= q if (mask >> i) & 1 else 1.0 - q
        return prob


def _event_table(graph: TinyGraph, event) -> np.ndarray:
    """Evaluate `event` (predicate on a boolean open-edge array) on all masks."""
    m = len(graph.edges)
    table = np.empty(1 << m, dtype=bool)
    for mask in range(1 << m):
        open_edges = np.array([(mask >> i) & 1 for i in range(m)], dtype=bool)
        table[mask] = bool(event(open_edges))
    return table


def enumerate_probability(graph: TinyGraph, event) -> float:
    """P(event) by exhaustive summation over all 2^m edge configurations."""
    table = _event_table(graph, event)
    return math.fsum(graph.config_prob(mask)
                     for mask in range(1 << len(graph.edges)) if table[mask])


def bk_check(graph: TinyGraph, event_a, event_b) -> tuple[float, float]:
    """(P(A o B), P(A) P(B)) with the disjoint occurrence decided exactly.

    A o B holds in a configuration when the open edges split into
    disjoint K, K^c with the K-part alone in A and the complement alone
    in B. Runs over all submasks: O(3^m), so m <= 12.
    """
    m = len(graph.edges)
    if m > 12:
        raise ValueError("bk_check supports at most 12 edges")
    ta, tb = _event_table(graph, event_a), _event_table(graph, event_b)
    pa = math.fsum(graph.config_prob(i) for i in range(1 << m) if ta[i])
    pb = math.fsum(graph.config_prob(i) for i in range(1 << m) if tb[i])
    box = 0.0
    for mask in range(1 << m):
        sub = mask
        found = False
        while True:
            if ta[sub] and tb[mask & ~sub]:
                found = True
                break
            if sub == 0:
                break
            sub = (sub - 1) & mask
        if found:
            box += graph.config_prob(mask)
    return box, pa * pb


def connection_event(graph: TinyGraph, u: int, v: int):
    """Increasing predicate: u and v joined by open edges."""

    def event(open_edges: np.ndarray) -> bool:
        parent = list(range(graph.n_vertices))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for i, (a, b, _) in enumerate(graph.edges):
            if open_edges[i]:
                parent[find(a)] = find(b)
        return find(u) == find(v)

    return event


def random_increasing_event(graph: TinyGraph, rng: np.random.Generator):
    """A random increasing event: the upset generated by random edge sets."""
    m = len(graph.edges)
    n_gen = int(rng.integers(1, 4))
    gens = []
    for _ in range(n_gen):
        size = int(rng.integers(1, m + 1))
        gens.append(frozenset(rng.choice(m, size=size, replace=False).tolist()))

    def event(open_edges: np.ndarray) -> bool:
        open_set = {i for i in range(m) if open_edges[i]}
        return any(g <= open_set for g in gens)

    return event


# ----------------------------------------------------- volume moments

def mean_volume(kernel: Kernel, off: OffspringDist, r: int, N: int,
                R: int, pad: int = 0, residual_correct: bool = False) -> float:
    """E|V(Q_r)| = sum_{x in Q_r} G(x), window-truncated at (N, R).

    `pad` widens the internal convolution window so mass leaving Q_R can
    re-enter; `residual_correct` adds the geometric Green residual to
    every site (accurate when r is well inside the N-step spread).
    """
    if r > R:
        raise ValueError("need r <= R")
    res = green_function(kernel, N, R, pad=pad)
    g = res.field.values
    if residual_correct:
        g = g + res.residual
    d = kernel.d
    sl = tuple(slice(R - r, R + r + 1) for _ in range(d))
    return float(g[sl].sum())


def three_point_sum(kernel: Kernel, sigma_sq: float, R: int, N: int,
                    r: int, pad: int = 0, residual_correct: bool = False,
                    z_window: int | None = None) -> float:
    """Window-truncated E|V(Q_r)|^2 for the critical BRW.

    Decomposes over particle pairs: a diagonal term sum_x G(x), an
    ancestor-chain term 2 sum_{x,y} G(x)(G - delta)(y - x), and the
    branching term sigma^2 sum_z G(z) (sum_{x in Q_r}(G - delta)(x - z))^2,
    with the branch point z confined to Q_{z_window} (default Q_R). For
    heavy tails (d <= 3 min(2, alpha) / 2) the unrestricted z-sum
    diverges, so the window is part of the definition; taking z_window
    proportional to r recovers the r^(3 min(2, alpha)) scaling.

    With residual_correct the geometric Green residual is added to every
    site, which is accurate when R is well inside the N-step spread.
    """
    if r > R // 4:
        raise ValueError("need r <= R/4 for window margin")
    if r == 0 and N == 0:
        return 1.0
    d = kernel.d
    res = green_function(kernel, N, R, pad=pad)
    g = res.field.values
    if residual_correct:
        g = g + res.residual
    origin = (R,) * d
    h = g.copy()
    h[origin] -= 1.0
    w_r = 2 * r + 1
    sl = tuple(slice(R - r, R + r + 1) for _ in range(d))
    g_in = g[sl]
    term1 = float(g_in.sum())
    # s(z) = sum_{x in Q_r} h(x - z) for z in the full window
    ones = np.ones((w_r,) * d)
    s_full = fftconvolve(ones, np.flip(h))
    w_R = 2 * R + 1
    center = tuple(slice((sz - w_R) // 2, (sz - w_R) // 2 + w_R)
                   for sz in s_full.shape)
    s = s_full[center]
    term2 = 2.0 * float(np.sum(g_in * s[sl]))
    if z_window is None or z_window >= R:
        term3 = float(sigma_sq) * float(np.sum(g * s * s))
    else:
        zl = tuple(slice(R - z_window, R + z_window + 1) for _ in range(d))
        term3 = float(sigma_sq) * float(np.sum(g[zl] * s[zl] * s[zl]))
    return term1 + term2 + term3


def truncated_second_moment(kernel: Kernel, sigma_sq: float, r: int, N: int,
                            W: int | None = None) -> float:
    """Exact E|V(Q_r)|^2 for the BRW restricted to generations 0..N.

    Unlike three_point_sum, which multiplies Green's functions that each
    run to generation N, this couples the generation budgets exactly: a
    pair (x at generation n, y at generation n + j) contributes only for
    n + j <= N, and the branch point at generation k only feeds children
    chains of length <= N - k. It therefore matches generation-capped
    Monte Carlo to sampling error, at O(N) convolutions on a window of
    half-width W plus O(N^2 r^d) inner products. W defaults to four times
    the N-step spread so escape loss is negligible.
    """
    if r < 0 or N < 0:
        raise ValueError("need r >= 0 and N >= 0")
    if N == 0:
        return 1.0
    d = kernel.d
    if W is None:
        a = min(2.0, kernel.spec.alpha)
        W = max(4 * r, int(math.ceil(4.0 * N ** (1.0 / a))))
    if r > W:
        raise ValueError("need r <= W")
    ker = kernel_window(kernel, W)
    # P[n] = n-step transition probabilities on the window
    P = [np.zeros((2 * W + 1,) * d)]
    P[0][(W,) * d] = 1.0
    for _ in range(N):
        P.append(_windowed_convolve(P[-1], ker, W))
    sl = tuple(slice(W - r, W + r + 1) for _ in range(d))
    ones = np.ones((2 * r + 1,) * d)
    w_W = 2 * W + 1
    center_of = None

    def corr(p: np.ndarray) -> np.ndarray:
        """corr(z) = sum_{x in Q_r} p(x - z) over the full window."""
        nonlocal center_of
        full = fftconvolve(ones, np.flip(p))
        if center_of is None:
            center_of = tuple(slice((sz - w_W) // 2, (sz - w_W) // 2 + w_W)
                              for sz in full.shape)
        return full[center_of]

    # term1: diagonal pairs; term2: ancestor chains of length j >= 1 with
    # the lower endpoint at generation n <= N - j
    term1 = math.fsum(float(P[n][sl].sum()) for n in range(N + 1))
    T = [corr(P[j])[sl] for j in range(N + 1)]  # T_j restricted to Q_r
    U = np.cumsum(np.stack(T[1:]), axis=0)      # U[m-1] = sum_{j<=m} T_j
    term2 = 2.0 * math.fsum(float(np.sum(P[n][sl] * U[N - n - 1]))
                            for n in range(N))
    # term3: branch point at generation k carries two independent chains,
    # each of length 1..N-k
    term3 = 0.0
    S = np.zeros((2 * W + 1,) * d)
    for m in range(1, N + 1):
        S += corr(P[m])
        term3 += float(np.sum(P[N - m] * S * S))
    return term1 + term2 + float(sigma_sq) * term3
