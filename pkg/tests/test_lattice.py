import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from longarm.lattice import (Shell, cube_contains, half_cube_contains,
                             half_cube_mask, leading_index, shell_contains,
                             shell_partition_radii, shifted_half_cube_contains,
                             sq_norm, sup_norm, sup_norms)

points = st.lists(st.integers(-50, 50), min_size=1, max_size=4)


@given(points)
def test_sup_norm_matches_numpy(x):
    assert sup_norm(x) == int(np.max(np.abs(x)))


@given(points)
def test_sq_norm_matches_numpy(x):
    assert sq_norm(x) == int(np.dot(x, x))


def test_sup_norms_vectorized(rng):
    pts = rng.integers(-100, 100, size=(200, 3))
    assert np.array_equal(sup_norms(pts), np.max(np.abs(pts), axis=1))


@given(points, st.integers(0, 60))
def test_cube_contains(x, r):
    assert cube_contains(x, r) == (sup_norm(x) <= r)


def test_shell_validation():
    with pytest.raises(ValueError):
        Shell(j=5, w=0)
    with pytest.raises(ValueError):
        Shell(j=5, w=6)
    Shell(j=5, w=5)


@given(points, st.integers(1, 40), st.integers(1, 40))
def test_shell_membership(x, j, w):
    if w > j:
        w = j
    shell = Shell(j=j, w=w)
    n = sup_norm(x)
    expected = (j - w) < n <= j
    assert shell.contains(x) == expected
    assert shell_contains(x, shell) == expected
    assert bool(shell.mask(np.array([x]))[0]) == expected


def test_shell_partition_covers_cube():
    """The partition radii tile Q_j \\ {0} with disjoint shells."""
    j, w = 36, 12
    shells = shell_partition_radii(j, w)
    covered = []
    for s in shells:
        covered.extend(range(s.j - s.w + 1, s.j + 1))
    assert sorted(covered) == list(range(1, j + 1))
    assert len(covered) == len(set(covered))
    with pytest.raises(ValueError):
        shell_partition_radii(37, 12)


@given(points)
def test_leading_index_is_max_axis(x):
    if all(v == 0 for v in x):
        with pytest.raises(ValueError):
            leading_index(x)
    else:
        i = leading_index(x)
        assert abs(x[i]) == max(abs(v) for v in x)


def test_half_cube_membership_d2():
    x = np.array([10, 3])
    # leading axis 0, sign +: the half-cube faces +e_0
    assert half_cube_contains(x, x, side=4)
    assert half_cube_contains(x + np.array([4, 0]), x, side=4)
    assert not half_cube_contains(x + np.array([5, 0]), x, side=4)
    assert not half_cube_contains(x - np.array([1, 0]), x, side=4)
    assert half_cube_contains(x + np.array([2, -4]), x, side=4)
    assert not half_cube_contains(x + np.array([2, -5]), x, side=4)


def test_half_cube_mask_agrees_with_scalar(rng):
    x = np.array([-7, 2, 1])
    ys = x + rng.integers(-6, 7, size=(300, 3))
    mask = half_cube_mask(ys, x, side=5)
    for y, m in zip(ys, mask):
        assert bool(m) == half_cube_contains(y, x, 5)


def test_half_cube_size():
    """|half cube| = (side+1) * (2*side+1)^(d-1) sites."""
    x = np.array([9, -2])
    side = 3
    count = 0
    for dy0 in range(-side, side + 1):
        for dy1 in range(-side, side + 1):
            count += half_cube_contains(x + np.array([dy0, dy1]), x, side)
    assert count == (side + 1) * (2 * side + 1)


def test_shifted_half_cube_outside_cube():
    """Every member of the shifted half-cube lies strictly outside Q_j."""
    j, side = 10, 3
    x = np.array([8, -4])  # inside the shell near the +e_0 face
    found = 0
    for dy0 in range(-2 * side, 2 * side + j):
        for dy1 in range(-2 * side - j, 2 * side + j):
            y = np.array([dy0, dy1])
            if shifted_half_cube_contains(y, x, j, side):
                found += 1
                assert sup_norm(y) > j
    assert found > 0
