"""Critical Galton-Watson trees: sampling and the total-progeny oracle.

The exact total-progeny distribution is computed with the Otter-Dwass
identity P(|T| = n) = P(S_n = n - 1) / n, where S_n is an n-fold
convolution of the offspring law. It serves as the independent oracle for
the sampled tree-size distribution and the square-root survival tail.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_TABLE = 64          # largest supported explicit offspring count
_GEOM_TRUNC = 64        # truncation for the geometric-half table oracle


@dataclass(frozen=True)
class OffspringDist:
    """A critical offspring law: mean 1, finite positive variance.

    Either an explicit finite table {p_m} or the analytic geometric-half
    law p_m = 2^-(m+1) (which gets an exact inverse-CDF sampler).
    """

    probs: np.ndarray
    geometric: bool = False

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", p)
        if p.ndim != 1 or len(p) > MAX_TABLE + 1:
            raise ValueError(f"offspring table must be 1-d with at most {MAX_TABLE + 1} entries")
        if np.any(p < 0):
            raise ValueError("offspring probabilities must be nonnegative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"offspring probabilities sum to {p.sum()}, not 1")
        m = np.arange(len(p))
        mean = float(np.dot(m, p))
        if abs(mean - 1.0) > 1e-12:
            raise ValueError(f"offspring mean is {mean}, law must be critical")
        var = float(np.dot(m * (m - 1), p))
        if var <= 0:
            raise ValueError("offspring law is trivial (sigma_p^2 = 0)")
        object.__setattr__(self, "_cdf", np.cumsum(p))

    @classmethod
    def from_table(cls, probs) -> "OffspringDist":
        return cls(probs=np.asarray(probs, dtype=float))

    @classmethod
    def binary(cls) -> "OffspringDist":
        """p_0 = p_2 = 1/2; sigma_p^2 = 1."""
        return cls(probs=np.array([0.5, 0.0, 0.5]))

    @classmethod
    def geometric_half(cls) -> "OffspringDist":
        """p_m = 2^-(m+1); sigma_p^2 = 2.

        The table is truncated far below double precision; sampling uses
        the exact closed-form geometric law.
        """
        p = 0.5 ** (np.arange(_GEOM_TRUNC + 1) + 1.0)
        p[-1] += 1.0 - p.sum()  # absorb the 2^-65 remainder to keep criticality exact
        return cls(probs=p, geometric=True)

    def sigma_sq(self) -> float:
        m = np.arange(len(self.probs))
        return float(np.dot(m * (m - 1), self.probs))

    def pgf(self, z: np.ndarray) -> np.ndarray:
        """Probability generating function f(z) = sum p_m z^m."""
        if self.geometric:
            return 1.0 / (2.0 - np.asarray(z))
        return np.polynomial.polynomial.polyval(np.asarray(z), self.probs)

    def sample_counts(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.geometric:
            return rng.geometric(0.5, size=size) - 1
        return np.searchsorted(self._cdf, rng.random(size), side="right")

    def to_json(self):
        return "geometric-half" if self.geometric else list(self.probs)

    @classmethod
    def from_json(cls, obj) -> "OffspringDist":
        if obj == "geometric-half":
            return cls.geometric_half()
        return cls.from_table(obj)


@dataclass
class Tree:
    """A sampled rooted tree in parent-array form (root at index 0)."""

    parents: np.ndarray     # parents[i] < i; parents[0] = -1
    truncated: bool

    def __len__(self) -> int:
        return len(self.parents)


def sample_tree(off: OffspringDist, cap: int, rng: np.random.Generator) -> Tree:
    """Breadth-first Galton-Watson sample, stopped at `cap` vertices.

    When adding a generation would exceed the cap, the partially generated
    generation is retained and the tree is flagged truncated.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    parents = [-1]
    gen = np.array([0], dtype=np.int64)
    total = 1
    truncated = False
    if cap == 1:
        # the root's offspring draw decides whether anything was cut off
        return Tree(parents=np.array([-1], dtype=np.int64),
                    truncated=int(off.sample_counts(rng, 1)[0]) > 0)
    while len(gen) and not truncated:
        counts = off.sample_counts(rng, len(gen))
        child_parents = np.repeat(gen, counts)
        room = cap - total
        if len(child_parents) > room:
            child_parents = child_parents[:room]
            truncated = True
        parents.extend(child_parents.tolist())
        gen = np.arange(total, total + len(child_parents), dtype=np.int64)
        total += len(child_parents)
    return Tree(parents=np.asarray(parents, dtype=np.int64), truncated=truncated)


def sample_progeny_sizes(off: OffspringDist, cap: int,
                         rng: np.random.Generator, n_trees: int,
                         batch_size: int = 100000) -> np.ndarray:
    """Total progeny of `n_trees` independent trees, each stopped at `cap`.

    Trees are advanced jointly, generation by generation, in flat arrays;
    a returned value of `cap` means the tree reached the cap (its true
    size is >= cap). Same law as len(sample_tree(...)), but fast enough
    for million-tree comparisons against the exact pmf.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    out = np.empty(n_trees, dtype=np.int64)
    done = 0
    while done < n_trees:
        m = min(batch_size, n_trees - done)
        sizes = np.ones(m, dtype=np.int64)
        tid = np.arange(m, dtype=np.int64)
        alive = np.ones(m, dtype=np.int64)  # particles per active tree
        while len(tid):
            counts = off.sample_counts(rng, int(alive.sum()))
            # per-tree offspring totals via segment sums
            seg = np.repeat(np.arange(len(tid)), alive)
            children = np.bincount(seg, weights=counts, minlength=len(tid)).astype(np.int64)
            sizes[tid] = np.minimum(sizes[tid] + children, cap)
            keep = (children > 0) & (sizes[tid] < cap)
            tid = tid[keep]
            alive = children[keep]
        out[done:done + m] = sizes
        done += m
    return out


def total_progeny_pmf(off: OffspringDist, n_max: int) -> np.ndarray:
    """Exact P(|T| = n) for n = 1..n_max via the Otter-Dwass identity.

    Convolutions are truncated at n_max (only indices < n_max are ever
    read); accumulated float error is below n_max * 1e-15.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    p = np.asarray(off.probs, dtype=float)
    out = np.empty(n_max)
    conv = np.array([1.0])
    for n in range(1, n_max + 1):
        conv = np.convolve(conv, p)[:n_max]
        out[n - 1] = conv[n - 1] / n if n - 1 < len(conv) else 0.0
    return out


def survival_tail(pmf: np.ndarray) -> np.ndarray:
    """P(|T| >= s) for s = 1..len(pmf), including mass beyond the table."""
    tail = np.empty(len(pmf))
    tail[0] = 1.0
    tail[1:] = 1.0 - np.cumsum(pmf[:-1])
    return tail


def sigma_sq(off: OffspringDist) -> float:
    return off.sigma_sq()
