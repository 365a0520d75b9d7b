"""Integer lattice geometry: sup-norm cubes, shells, and half-cubes.

All predicates are exact integer arithmetic. Points are int sequences or
numpy int arrays; batch variants (suffix ``_mask``) operate on (n, d)
arrays and return boolean masks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _as_point(x) -> np.ndarray:
    a = np.asarray(x, dtype=np.int64)
    if a.ndim == 0:
        a = a.reshape(1)
    if a.ndim != 1:
        raise ValueError("a point must be a 1-d integer sequence")
    return a


def sup_norm(x) -> int:
    """The sup (l-infinity) norm of a lattice point."""
    return int(np.max(np.abs(_as_point(x))))


def sup_norms(pts: np.ndarray) -> np.ndarray:
    """Row-wise sup norms of an (n, d) array."""
    return np.max(np.abs(pts), axis=1)


def sq_norm(x) -> int:
    """Exact squared Euclidean norm (integer)."""
    a = _as_point(x)
    return int(np.dot(a, a))


def cube_contains(x, r: int) -> bool:
    """Whether x lies in the cube Q_r = {y : sup_norm(y) <= r}."""
    if r < 0:
        raise ValueError(f"cube radius must be >= 0, got {r}")
    return sup_norm(x) <= r


@dataclass(frozen=True)
class Shell:
    """Cubic shell of outer radius j and thickness w: Q_j minus Q_{j-w}."""

    j: int
    w: int

    def __post_init__(self):
        if not (0 < self.w <= self.j):
            raise ValueError(f"shell requires 0 < w <= j, got j={self.j}, w={self.w}")

    def contains(self, x) -> bool:
        n = sup_norm(x)
        return self.j - self.w < n <= self.j

    def mask(self, pts: np.ndarray) -> np.ndarray:
        n = sup_norms(pts)
        return (n > self.j - self.w) & (n <= self.j)


def shell_contains(x, shell: Shell) -> bool:
    return shell.contains(x)


def leading_index(x) -> int:
    """The smallest (0-based) index i with |x_i| = sup_norm(x).

    Undefined (rejected) at the origin.
    """
    a = np.abs(_as_point(x))
    m = int(a.max())
    if m == 0:
        raise ValueError("leading index is undefined at the origin")
    return int(np.argmax(a == m))


def half_cube_contains(y, x, side: int) -> bool:
    """Membership of y in the outward-facing half-cube attached to x.

    The half-cube has sup-radius `side` around x, restricted to points at
    least as far out as x along x's leading axis and on the same side.
    """
    if side < 0:
        raise ValueError("side must be >= 0")
    xa, ya = _as_point(x), _as_point(y)
    i = leading_index(xa)
    if int(np.max(np.abs(ya - xa))) > side:
        return False
    return abs(int(ya[i])) >= abs(int(xa[i])) and np.sign(ya[i]) == np.sign(xa[i])


def half_cube_mask(ys: np.ndarray, x, side: int) -> np.ndarray:
    """Batch version of half_cube_contains for an (n, d) array ys."""
    if side < 0:
        raise ValueError("side must be >= 0")
    xa = _as_point(x)
    i = leading_index(xa)
    near = np.max(np.abs(ys - xa), axis=1) <= side
    yi = ys[:, i]
    outward = (np.abs(yi) >= abs(int(xa[i]))) & (np.sign(yi) == np.sign(xa[i]))
    return near & outward


def shifted_half_cube_contains(y, x, j: int, side: int) -> bool:
    """Membership of y in the boundary-shifted outward-facing half-cube.

    x (in some shell with outer radius j) is first pushed outward along its
    leading axis onto the face of Q_j; membership additionally requires
    |y_i| > j on the same side, which for side <= L forces
    y in Q_{j+L} \\ Q_j.
    """
    if side < 0:
        raise ValueError("side must be >= 0")
    xa, ya = _as_point(x), _as_point(y)
    i = leading_index(xa)
    shifted = xa.copy()
    shifted[i] += int(np.sign(xa[i])) * (j - sup_norm(xa))
    if int(np.max(np.abs(shifted - ya))) > side:
        return False
    return abs(int(ya[i])) > j and np.sign(ya[i]) == np.sign(xa[i])


def shell_partition_radii(j: int, w: int) -> list[Shell]:
    """Shells {Shell(k*w, w)} tiling Q_j \\ {0} when w divides j."""
    if j % w != 0:
        raise ValueError("w must divide j to tile Q_j")
    return [Shell(k * w, w) for k in range(1, j // w + 1)]
