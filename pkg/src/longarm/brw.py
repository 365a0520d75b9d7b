"""Branching random walk: embedded critical trees and one-arm estimation.

A BRW realization embeds a sampled Galton-Watson tree into Z^d by giving
every edge an independent step drawn from the kernel. The one-arm event
is that some particle leaves the cube Q_r. Truncated trees are counted
as hits (a conservative convention audited by the cap tail bound).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import analysis
from .gw import OffspringDist, Tree, sample_tree, survival_tail, total_progeny_pmf
from .kernel import Kernel
from .lattice import Shell, half_cube_mask, sup_norm, sup_norms
from .seeds import stream_seed, task_rng


@dataclass
class Embedding:
    """A BRW realization: tree structure plus particle positions."""

    tree: Tree
    pos: np.ndarray         # (n, d) int64; pos[0] = origin
    truncated: bool

    def __len__(self) -> int:
        return len(self.tree)


def sample_brw(off: OffspringDist, kernel: Kernel, cap: int,
               rng: np.random.Generator) -> Embedding:
    """Sample a tree and embed it with i.i.d. kernel steps along edges."""
    tree = sample_tree(off, cap, rng)
    n = len(tree)
    pos = np.zeros((n, kernel.d), dtype=np.int64)
    if n > 1:
        steps = kernel.sample_step(rng, n - 1)
        # parents[i] < i, so a single forward pass resolves all positions
        for i in range(1, n):
            pos[i] = pos[tree.parents[i]] + steps[i - 1]
    return Embedding(tree=tree, pos=pos, truncated=tree.truncated)


def max_displacement(emb: Embedding) -> int:
    return int(np.max(sup_norms(emb.pos)))


def one_arm(emb: Embedding, r: int) -> bool:
    """Whether some particle left Q_r (r = -1 means Q_r is empty: always true)."""
    if r < -1:
        raise ValueError("r must be >= -1")
    if r == -1:
        return True
    return max_displacement(emb) > r


def count_in_set(emb: Embedding, region) -> int:
    """Number of particles whose position satisfies the region predicate.

    `region` maps an (n, d) int array to a boolean mask (e.g. cube_region).
    """
    return int(np.count_nonzero(region(emb.pos)))


def cube_region(r: int):
    if r < 0:
        raise ValueError("cube radius must be >= 0")
    return lambda pts: sup_norms(pts) <= r


def shell_region(shell: Shell):
    return shell.mask


def complement_region(region):
    return lambda pts: ~region(pts)


def long_edge_event(emb: Embedding, threshold: int) -> bool:
    """Whether some parent-child step has sup norm exceeding `threshold`."""
    parents = emb.tree.parents
    if len(parents) < 2:
        return False
    steps = emb.pos[1:] - emb.pos[parents[1:]]
    return bool(np.max(sup_norms(steps)) > threshold)


def boundary_stats(emb: Embedding, j: int, w: int, big_l: int,
                   rho_over: float) -> tuple[int, int]:
    """First-entry boundary count X_j and half-cube descendant count A_j.

    X_j counts particles in the shell Q_j \\ Q_{j-w} whose strict ancestors
    all lie in Q_{j-w}. A_j counts particles lying in the outward-facing
    half-cube of side floor(big_l ** rho_over) attached to their nearest
    X-ancestor (the X-particle itself included).
    """
    shell = Shell(j=j, w=w)
    n = len(emb)
    parents = emb.tree.parents
    norms = sup_norms(emb.pos)
    inner = norms <= j - w
    anc_ok = np.ones(n, dtype=bool)
    for i in range(1, n):
        p = parents[i]
        anc_ok[i] = anc_ok[p] and inner[p]
    x_mask = shell.mask(emb.pos) & anc_ok
    x_count = int(np.count_nonzero(x_mask))
    side = int(math.floor(big_l ** rho_over))
    xanc = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        if x_mask[i]:
            xanc[i] = i
        elif parents[i] >= 0:
            xanc[i] = xanc[parents[i]]
    a_count = 0
    for x in np.flatnonzero(x_mask):
        members = np.flatnonzero(xanc == x)
        a_count += int(np.count_nonzero(
            half_cube_mask(emb.pos[members], emb.pos[x], side)))
    return x_count, a_count


def volume_moments(off: OffspringDist, kernel: Kernel, radii, gen_cap: int,
                   samples: int, rng: np.random.Generator,
                   batch_size: int = 2000):
    """Sample moments of |V(Q_r)| over the first `gen_cap` generations.

    |V(Q_r)| counts all particles (root included, multiplicity by
    generation) located in Q_r among generations 0..gen_cap. Returns
    {r: (mean, stderr_of_mean, mean_sq, stderr_of_mean_sq)}.
    """
    radii = [int(r) for r in radii]
    d = kernel.d
    sums = {r: [] for r in radii}
    done = 0
    while done < samples:
        n_trees = min(batch_size, samples - done)
        counts = np.zeros((n_trees, len(radii)), dtype=np.int64)
        counts[:, :] = 1  # the root sits at the origin, inside every Q_r
        tid = np.arange(n_trees, dtype=np.int64)
        pos = np.zeros((n_trees, d), dtype=np.int64)
        for _ in range(gen_cap):
            if not len(tid):
                break
            k = off.sample_counts(rng, len(tid))
            total = int(k.sum())
            if total == 0:
                break
            tid = np.repeat(tid, k)
            pos = pos[np.repeat(np.arange(len(pos)), k)] + kernel.sample_step(rng, total)
            # particles outside Q_r now may re-enter later, so none are pruned
            norms = sup_norms(pos)
            for j, r in enumerate(radii):
                inside = norms <= r
                if inside.any():
                    counts[:, j] += np.bincount(tid[inside], minlength=n_trees)
        for j, r in enumerate(radii):
            sums[r].extend(counts[:, j].tolist())
        done += n_trees
    out = {}
    for r in radii:
        a = np.asarray(sums[r], dtype=float)
        out[r] = (float(a.mean()), float(a.std(ddof=1) / math.sqrt(samples)),
                  float((a ** 2).mean()),
                  float((a ** 2).std(ddof=1) / math.sqrt(samples)))
    return out


# ---------------------------------------------------- batched estimation

_BATCH = 20000


def _one_arm_batch(off: OffspringDist, kernel: Kernel, r: int, cap: int,
                   rng: np.random.Generator, n_trees: int) -> tuple[int, int]:
    """One-arm tallies for `n_trees` independent trees, simulated jointly.

    Returns (hits including truncations, truncations). Trees are advanced
    generation by generation in flat arrays; a tree is retired as soon as
    it hits (a particle leaves Q_r) or exceeds the vertex cap.
    """
    d = kernel.d
    hit = np.zeros(n_trees, dtype=bool)
    trunc = np.zeros(n_trees, dtype=bool)
    tid = np.arange(n_trees, dtype=np.int64)
    pos = np.zeros((n_trees, d), dtype=np.int64)
    counts = np.ones(n_trees, dtype=np.int64)
    while len(tid):
        k = off.sample_counts(rng, len(tid))
        total = int(k.sum())
        if total == 0:
            break
        ctid = np.repeat(tid, k)
        cpos = pos[np.repeat(np.arange(len(tid)), k)] + kernel.sample_step(rng, total)
        counts += np.bincount(ctid, minlength=n_trees)
        out = sup_norms(cpos) > r
        if out.any():
            hit[ctid[out]] = True
        over = (counts > cap) & ~hit
        if over.any():
            trunc |= over
        dead = hit | trunc
        keep = ~dead[ctid]
        tid = ctid[keep]
        pos = cpos[keep]
    return int(np.count_nonzero(hit | trunc)), int(np.count_nonzero(trunc))


def _gamma_brw_task(args) -> tuple[int, int]:
    off_json, spec_json, tab_radius, r, cap, sub_master, index, n = args
    from .kernel import cached_kernel
    off = OffspringDist.from_json(off_json)
    kernel = cached_kernel(spec_json, tab_radius)
    return _one_arm_batch(off, kernel, r, cap, task_rng(sub_master, index), n)


def default_cap_policy(alpha: float):
    """cap(r) = 100 r^(2 min(2, alpha)): well beyond the relevant tree sizes.

    A walk spreads like n^(1/min(2, alpha)) in n generations, so reaching
    distance r takes ~ r^min(2, alpha) generations and the trees that
    matter have ~ r^(2 min(2, alpha)) vertices; the factor 100 puts the
    cap far into the tail of that scale.
    """
    a = min(2.0, alpha)

    def cap(r: int) -> int:
        return max(1000, int(math.ceil(100.0 * r ** (2.0 * a))))

    return cap


def cap_tail_bound(off: OffspringDist, cap: int) -> float:
    """P(|T| >= cap) from the progeny oracle (asymptotic beyond 10^4).

    For large caps the exact tail at s0 = 10^4 is extended by the
    square-root law P(|T| >= s) ~ c / sqrt(s) with c calibrated at s0.
    """
    s0 = 10000
    if cap <= s0:
        return float(survival_tail(total_progeny_pmf(off, cap))[cap - 1])
    base = float(survival_tail(total_progeny_pmf(off, s0))[s0 - 1])
    return base * math.sqrt(s0 / cap)


def estimate_gamma_brw(off: OffspringDist, kernel: Kernel, radii, samples: int,
                       cap_policy=None, seed: int = 0, workers: int = 1,
                       batch_size: int = _BATCH) -> analysis.EstimateTable:
    """Monte Carlo gamma(r) over the given radii with deterministic seeding.

    The batch layout (per-radius stream, fixed batch size) is independent
    of `workers`, so the output is byte-identical for any worker count.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    radii = [int(r) for r in radii]
    if any(r < 1 for r in radii):
        raise ValueError("radii must be >= 1")
    if cap_policy is None:
        cap_policy = default_cap_policy(kernel.spec.alpha)
    tasks = []
    layout = []
    for ri, r in enumerate(radii):
        cap = int(cap_policy(r))
        if cap < 1:
            raise ValueError(f"cap_policy produced cap {cap} < 1 at r={r}")
        sub = stream_seed(seed, ri)
        n_batches = (samples + batch_size - 1) // batch_size
        layout.append((r, cap, n_batches))
        for b in range(n_batches):
            n = min(batch_size, samples - b * batch_size)
            tasks.append((off.to_json(), kernel.spec.to_json(), kernel.tab_radius,
                          r, cap, sub, b, n))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_gamma_brw_task, tasks, chunksize=1))
    else:
        results = [_gamma_brw_task(t) for t in tasks]
    rows = []
    pos = 0
    for r, cap, n_batches in layout:
        hits = sum(h for h, _ in results[pos:pos + n_batches])
        pos += n_batches
        g = hits / samples
        lo, hi = analysis.wilson_ci(hits, samples)
        rows.append(analysis.EstimateRow(r=r, hits=hits, trials=samples,
                                         gamma_hat=g, ci_lo=lo, ci_hi=hi,
                                         cap=cap,
                                         cap_tail_bound=cap_tail_bound(off, cap)))
    return analysis.EstimateTable(rows=rows)
