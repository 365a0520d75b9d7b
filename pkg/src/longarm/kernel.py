"""One-step distribution family on Z^d with heavy-tailed decay.

A kernel is D(0, x) = h(x / Lambda) / sum_y h(y / Lambda) for a radially
symmetric profile h. Four profiles are supported:

* ``canonical``       h(u) = max(|u|_2, 1)^(-d - alpha), alpha finite
* ``bounded-uniform`` h flat on [-1, 1]^d (all moments finite, alpha = inf)
* ``exponential``     h(u) = exp(-kappa |u|_inf)        (alpha = inf)
* ``custom-table``    finite nonnegative weight table   (alpha = inf)

The kernel precomputes exact per-sup-norm-shell masses up to a tabulated
radius and keeps an analytic tail beyond it. Sampling is radius-first
(inversion on the shell CDF, analytic tail inversion past the table) with
exact within-shell rejection, so the heavy tail is drawn without
truncation bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import zeta

CANONICAL = "canonical"
BOUNDED_UNIFORM = "bounded-uniform"
EXPONENTIAL = "exponential"
CUSTOM_TABLE = "custom-table"

_SHAPES = (CANONICAL, BOUNDED_UNIFORM, EXPONENTIAL, CUSTOM_TABLE)

INF = math.inf


@dataclass(frozen=True)
class KernelSpec:
    """Parameters of a one-step distribution.

    alpha is the polynomial decay exponent for the canonical shape and
    must be math.inf for the bounded / exponential / custom shapes (all
    spatial moments finite).
    """

    d: int
    alpha: float
    lam: float
    shape: str = CANONICAL
    kappa: float = 1.0
    table: tuple | None = None  # ((offset tuple, weight), ...) for custom

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if self.lam <= 0:
            raise ValueError(f"spatial scale must be > 0, got {self.lam}")
        if self.shape not in _SHAPES:
            raise ValueError(f"unknown shape {self.shape!r}")
        if self.alpha == 2:
            raise ValueError("alpha = 2 is not supported")
        if self.shape == CANONICAL:
            if not (0 < self.alpha < INF):
                raise ValueError("canonical shape requires finite alpha > 0")
        else:
            if self.alpha != INF:
                raise ValueError(f"{self.shape} shape requires alpha = inf")
        if self.shape == EXPONENTIAL and self.kappa <= 0:
            raise ValueError("exponential shape requires kappa > 0")
        if self.shape == CUSTOM_TABLE:
            if not self.table:
                raise ValueError("custom-table shape requires a weight table")
            for off, w in self.table:
                if len(off) != self.d or w < 0:
                    raise ValueError("invalid custom table entry")

    def to_json(self) -> dict:
        out = {"d": self.d, "alpha": None if self.alpha == INF else self.alpha,
               "lambda": self.lam, "shape": self.shape}
        if self.shape == EXPONENTIAL:
            out["kappa"] = self.kappa
        if self.shape == CUSTOM_TABLE:
            out["table"] = [[list(o), w] for o, w in self.table]
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "KernelSpec":
        alpha = obj.get("alpha")
        table = obj.get("table")
        return cls(
            d=int(obj["d"]),
            alpha=INF if alpha is None else float(alpha),
            lam=float(obj["lambda"]),
            shape=obj.get("shape", CANONICAL),
            kappa=float(obj.get("kappa", 1.0)),
            table=tuple((tuple(o), float(w)) for o, w in table) if table else None,
        )


# ---------------------------------------------------------------- geometry

def shell_count(d: int, s: int) -> int:
    """Number of lattice points with sup norm exactly s."""
    if s == 0:
        return 1
    return (2 * s + 1) ** d - (2 * s - 1) ** d


def shell_sites(d: int, s: int) -> np.ndarray:
    """All lattice points at sup norm s, as an (n, d) int array."""
    if s == 0:
        return np.zeros((1, d), dtype=np.int64)
    blocks = []
    for k in range(d):
        # coords < k strictly inside, coord k on a face, coords > k free
        axes = [np.arange(-s + 1, s) for _ in range(k)]
        axes.append(np.array([-s, s]))
        axes.extend(np.arange(-s, s + 1) for _ in range(d - 1 - k))
        grids = np.meshgrid(*axes, indexing="ij")
        blocks.append(np.stack([g.ravel() for g in grids], axis=1))
    return np.concatenate(blocks, axis=0).astype(np.int64)


def shell_unrank(d: int, s: int, idx: int) -> tuple:
    """Coordinates of the site with the given index in the shell ordering.

    The ordering is block-by-leading-face-axis with a mixed-radix layout;
    it only needs to be a fixed bijection onto the shell.
    """
    if s == 0:
        if idx != 0:
            raise IndexError(idx)
        return (0,) * d
    for k in range(d):
        block = 2 * (2 * s - 1) ** k * (2 * s + 1) ** (d - 1 - k)
        if idx < block:
            coords = [0] * d
            t, rem = divmod(idx, block // 2)
            coords[k] = s if t else -s
            for i in range(k):
                rem, v = divmod(rem, 2 * s - 1)
                coords[i] = v - (s - 1)
            for i in range(k + 1, d):
                rem, v = divmod(rem, 2 * s + 1)
                coords[i] = v - s
            return tuple(coords)
        idx -= block
    raise IndexError("shell index out of range")


# ---------------------------------------------------------------- profiles

def _weights(spec: KernelSpec, offsets: np.ndarray) -> np.ndarray:
    """Unnormalized weights h(x / Lambda) for an (n, d) array of offsets."""
    pts = np.asarray(offsets, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[None, :]
    if spec.shape == CANONICAL:
        r = np.sqrt(np.sum(pts * pts, axis=1)) / spec.lam
        return np.maximum(r, 1.0) ** (-(spec.d + spec.alpha))
    if spec.shape == BOUNDED_UNIFORM:
        return (np.max(np.abs(pts), axis=1) <= spec.lam).astype(float)
    if spec.shape == EXPONENTIAL:
        return np.exp(-spec.kappa * np.max(np.abs(pts), axis=1) / spec.lam)
    lut = {tuple(int(c) for c in off): w for off, w in spec.table}
    return np.array([lut.get(tuple(int(c) for c in p), 0.0) for p in np.asarray(offsets).reshape(-1, spec.d)])


def axis_weight(spec: KernelSpec, s) -> np.ndarray:
    """Maximum weight on the shell at sup norm s (attained on an axis)."""
    s = np.asarray(s, dtype=float)
    if spec.shape == CANONICAL:
        return np.maximum(s / spec.lam, 1.0) ** (-(spec.d + spec.alpha))
    if spec.shape == BOUNDED_UNIFORM:
        return (s <= spec.lam).astype(float)
    if spec.shape == EXPONENTIAL:
        return np.exp(-spec.kappa * s / spec.lam)
    out = np.zeros_like(s)
    for off, w in spec.table:
        m = max(abs(int(c)) for c in off)
        out[np.asarray(s) == m] = np.maximum(out[np.asarray(s) == m], w)
    return out


@lru_cache(maxsize=32)
def _cube_tail_constant(d: int, alpha: float) -> float:
    """K_d(alpha) = integral of |u|_2^(-d-alpha) over {|u|_inf > 1}.

    Splitting by which coordinate attains the sup norm and scaling it out
    reduces the integral to a bounded one over [-1, 1]^(d-1):
    K_d = (2 d / alpha) * int_{[-1,1]^(d-1)} (1 + |v|_2^2)^(-(d+alpha)/2) dv.
    """
    a = d + alpha
    if d == 1:
        return 2.0 / alpha
    if d == 2:
        c, _ = integrate.quad(lambda v: (1.0 + v * v) ** (-a / 2), -1, 1)
        return 4.0 / alpha * c
    if d == 3:
        c, _ = integrate.dblquad(
            lambda w, v: (1.0 + v * v + w * w) ** (-a / 2), -1, 1, -1, 1)
        return 6.0 / alpha * c
    raise NotImplementedError("canonical tail constant implemented for d <= 3")


def _canonical_tail_weight(spec: KernelSpec, t: int) -> float:
    """Total unnormalized weight outside Q_t for the canonical profile.

    Exact (Hurwitz zeta) in d = 1; continuum shell estimate with midpoint
    correction in d >= 2 (relative error O(t^-2), used only beyond the
    tabulated radius).
    """
    a = spec.d + spec.alpha
    if spec.d == 1:
        return 2.0 * spec.lam ** a * float(zeta(a, t + 1))
    k = _cube_tail_constant(spec.d, spec.alpha)
    return spec.lam ** a * k * (t + 0.5) ** (-spec.alpha)


# ----------------------------------------------------------------- kernel

@dataclass
class Kernel:
    """A built one-step distribution with exact shell tables.

    Immutable after construction; shared read access is safe.
    """

    spec: KernelSpec
    tab_radius: int
    norm_constant: float            # 1 / sum_x h(x / Lambda)
    shell_mass: np.ndarray          # unnormalized weight per shell, 0..tab
    shell_cdf: np.ndarray           # P(sup norm <= s), 0..tab
    suffix_prob: np.ndarray         # P(sup norm > s), 0..tab
    tail_weight: float              # unnormalized weight beyond tab_radius
    _lazy_tail: dict = field(default_factory=dict, repr=False)
    _shell_samplers: dict = field(default_factory=dict, repr=False)

    # -- scalar queries ---------------------------------------------------

    @property
    def d(self) -> int:
        return self.spec.d

    def pmf(self, x) -> float:
        """Exact D(0, x)."""
        w = _weights(self.spec, np.asarray(x, dtype=np.int64).reshape(1, -1))
        return float(w[0]) * self.norm_constant

    def pmf_array(self, offsets: np.ndarray) -> np.ndarray:
        return _weights(self.spec, offsets) * self.norm_constant

    def max_pmf(self) -> float:
        """sup_x D(0, x); the LRP parameter must satisfy p <= 1 / max_pmf."""
        if self.spec.shape == CUSTOM_TABLE:
            return max(w for _, w in self.spec.table) * self.norm_constant
        return float(axis_weight(self.spec, 0)) * self.norm_constant

    def tail_mass(self, t: int) -> float:
        """P(sup norm of a step > t)."""
        if t < 0:
            raise ValueError("t must be >= 0")
        if t <= self.tab_radius:
            return float(self.suffix_prob[t])
        return self._tail_weight_beyond(t) * self.norm_constant

    def _tail_weight_beyond(self, t: int) -> float:
        spec = self.spec
        if spec.shape == CANONICAL:
            return _canonical_tail_weight(spec, t)
        if spec.shape in (BOUNDED_UNIFORM, CUSTOM_TABLE):
            return 0.0
        # exponential: exact lazy shell walk (geometric decay terminates fast)
        total = 0.0
        s = t + 1
        while True:
            m = self._exact_shell_mass(s)
            total += m
            if m < 1e-18 * max(total, 1e-300):
                return total
            s += 1

    def _exact_shell_mass(self, s: int) -> float:
        if s <= self.tab_radius:
            return float(self.shell_mass[s])
        if s not in self._lazy_tail:
            self._lazy_tail[s] = float(np.sum(_weights(self.spec, shell_sites(self.d, s))))
        return self._lazy_tail[s]

    # -- moments ----------------------------------------------------------

    def moment_partial(self, q: float, cutoff: int) -> float:
        """Partial spatial moment sum over Q_cutoff of |x|_2^q D(0, x)."""
        if q < 0 or cutoff < 1:
            raise ValueError("q >= 0 and cutoff >= 1 required")
        spec = self.spec
        if spec.d == 1:
            s = np.arange(1, cutoff + 1, dtype=float)
            w = _weights(spec, s.reshape(-1, 1))
            total = 2.0 * float(np.sum(s ** q * w))
            if q == 0:
                total += float(_weights(spec, np.zeros((1, 1)))[0])
            return total * self.norm_constant
        total = 0.0
        for s in range(0 if q == 0 else 1, cutoff + 1):
            pts = shell_sites(spec.d, s)
            r2 = np.sum(pts.astype(float) ** 2, axis=1)
            total += float(np.sum(np.where(r2 > 0, r2 ** (q / 2), 1.0 if q == 0 else 0.0)
                                  * _weights(spec, pts)))
        return total * self.norm_constant

    # -- sampling ---------------------------------------------------------

    def sample_step(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        """Draw exact samples from D(0, .); shape (size, d) or (d,)."""
        n = 1 if size is None else int(size)
        u = rng.random(n)
        radii = np.searchsorted(self.shell_cdf, u, side="right").astype(np.int64)
        in_tail = radii > self.tab_radius
        if np.any(in_tail):
            radii[in_tail] = self._sample_tail_radii(u[in_tail])
        out = self._positions_for_radii(rng, radii)
        return out if size is not None else out[0]

    def _sample_tail_radii(self, u: np.ndarray) -> np.ndarray:
        """Invert the analytic tail: radius R with P(R > s) = tail(s)."""
        spec = self.spec
        q = (1.0 - u) / self.norm_constant  # remaining unnormalized weight
        if spec.shape == CANONICAL and spec.d == 1:
            a = spec.d + spec.alpha
            c = 2.0 * spec.lam ** a

            def tail_w(s):
                return c * zeta(a, s + 1.0)

            lo = np.full(len(q), self.tab_radius, dtype=np.int64)
            hi = lo + 1
            while True:  # doubling to bracket
                mask = tail_w(hi.astype(float)) >= q
                if not np.any(mask):
                    break
                lo = np.where(mask, hi, lo)
                hi = np.where(mask, 2 * hi, hi)
            # invariant: tail_w(lo) >= q > tail_w(hi)
            while np.any(hi - lo > 1):
                mid = (lo + hi) // 2
                mask = tail_w(mid.astype(float)) >= q
                lo = np.where(mask, mid, lo)
                hi = np.where(mask, hi, mid)
            return hi
        if spec.shape == CANONICAL:
            a = spec.d + spec.alpha
            c = spec.lam ** a * _cube_tail_constant(spec.d, spec.alpha)
            s = np.ceil((c / q) ** (1.0 / spec.alpha) - 0.5).astype(np.int64)
            return np.maximum(s, self.tab_radius + 1)
        if spec.shape == EXPONENTIAL:
            out = np.empty(len(q), dtype=np.int64)
            for i, qi in enumerate(q):
                s, rem = self.tab_radius + 1, qi
                while True:
                    m = self._exact_shell_mass(s)
                    if rem <= m or m < 1e-300:
                        break
                    rem -= m
                    s += 1
                out[i] = s
            return out
        raise AssertionError("bounded/custom kernels have no tail beyond the table")

    def _positions_for_radii(self, rng: np.random.Generator, radii: np.ndarray) -> np.ndarray:
        spec = self.spec
        n = len(radii)
        if spec.d == 1:
            signs = rng.integers(0, 2, size=n) * 2 - 1
            return (radii * signs).reshape(-1, 1)
        out = np.zeros((n, spec.d), dtype=np.int64)
        order = np.argsort(radii, kind="stable")
        sorted_r = radii[order]
        starts = np.searchsorted(sorted_r, np.unique(sorted_r), side="left")
        uniq = np.unique(sorted_r)
        ends = np.append(starts[1:], n)
        for s, a, b in zip(uniq, starts, ends):
            idx = order[a:b]
            out[idx] = self._sample_in_shell(rng, int(s), b - a)
        return out

    def _sample_in_shell(self, rng: np.random.Generator, s: int, m: int) -> np.ndarray:
        """m exact uniform-by-weight draws from the shell at sup norm s."""
        spec = self.spec
        if s == 0:
            return np.zeros((m, spec.d), dtype=np.int64)
        # small shells: cached inverse-cdf table (rejection has low
        # acceptance when the weight varies a lot across the shell)
        if spec.d > 1 and shell_count(spec.d, s) <= 250000:
            if s not in self._shell_samplers:
                sites = shell_sites(spec.d, s)
                w = _weights(spec, sites)
                cdf = np.cumsum(w)
                cdf /= cdf[-1]
                self._shell_samplers[s] = (sites, cdf)
            sites, cdf = self._shell_samplers[s]
            idx = np.searchsorted(cdf, rng.random(m), side="right")
            return sites[np.minimum(idx, len(sites) - 1)]
        wmax = float(axis_weight(spec, s))
        out = np.empty((m, spec.d), dtype=np.int64)
        todo = np.arange(m)
        while len(todo):
            k = len(todo)
            pts = rng.integers(-s, s + 1, size=(k, spec.d))
            ax = rng.integers(0, spec.d, size=k)
            sign = rng.integers(0, 2, size=k) * 2 - 1
            pts[np.arange(k), ax] = sign * s
            nmax = np.sum(np.abs(pts) == s, axis=1)
            w = _weights(spec, pts)
            acc = rng.random(k) < w / (wmax * nmax)
            out[todo[acc]] = pts[acc]
            todo = todo[~acc]
        return out


def build_kernel(spec: KernelSpec, tab_radius: int | None = None) -> Kernel:
    """Build a kernel with exact shell tables up to tab_radius.

    The normalizer sums exact shell masses through tab_radius (compensated
    summation) plus the analytic tail beyond it.
    """
    if tab_radius is None:
        tab_radius = 4096 if spec.d <= 2 else 256
    if tab_radius < 1:
        raise ValueError("tab_radius must be >= 1")
    min_tab = int(math.ceil(spec.lam * math.sqrt(spec.d))) + 1
    if spec.shape in (BOUNDED_UNIFORM, CUSTOM_TABLE):
        if spec.shape == CUSTOM_TABLE:
            min_tab = max(max(abs(int(c)) for c in off) for off, _ in spec.table)
        else:
            min_tab = int(math.floor(spec.lam))
    tab_radius = max(tab_radius, min_tab)

    masses = np.empty(tab_radius + 1)
    if spec.d == 1:
        s = np.arange(1, tab_radius + 1, dtype=np.int64)
        masses[0] = float(_weights(spec, np.zeros((1, 1)))[0])
        masses[1:] = 2.0 * _weights(spec, s.reshape(-1, 1))
    else:
        for s in range(tab_radius + 1):
            masses[s] = float(np.sum(_weights(spec, shell_sites(spec.d, s))))

    if spec.shape == CANONICAL:
        tail_w = _canonical_tail_weight(spec, tab_radius)
    elif spec.shape == EXPONENTIAL:
        tail_w, s = 0.0, tab_radius + 1
        while True:
            m = float(np.sum(_weights(spec, shell_sites(spec.d, s))))
            tail_w += m
            if m < 1e-18 * max(tail_w, masses.sum()):
                break
            s += 1
    else:
        tail_w = 0.0

    total = math.fsum(masses.tolist()) + tail_w
    norm = 1.0 / total
    cdf = np.cumsum(masses) * norm
    # suffix sums accumulated from the far end for stable small tails
    suffix = np.empty(tab_radius + 1)
    acc = tail_w
    for s in range(tab_radius, -1, -1):
        suffix[s] = acc * norm
        acc += masses[s]
    return Kernel(spec=spec, tab_radius=tab_radius, norm_constant=norm,
                  shell_mass=masses, shell_cdf=cdf, suffix_prob=suffix,
                  tail_weight=tail_w)


@lru_cache(maxsize=8)
def _cached_kernel(spec_json_str: str, tab_radius: int | None) -> Kernel:
    import json
    return build_kernel(KernelSpec.from_json(json.loads(spec_json_str)), tab_radius)


def cached_kernel(spec_json: dict, tab_radius: int | None = None) -> Kernel:
    """Process-local kernel cache keyed by the JSON spec.

    Worker tasks receive the spec (kernels do not pickle cheaply) and
    rebuild once per process instead of once per task.
    """
    import json
    return _cached_kernel(json.dumps(spec_json, sort_keys=True), tab_radius)
