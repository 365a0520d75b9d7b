"""Deterministic seed derivation for parallel Monte Carlo.

Every parallel job derives one independent RNG stream per task from
(master seed, task index) through a stateless 64-bit mixing function, so
results do not depend on scheduling or worker count.

The finalizer is splitmix64 (Steele, Lea & Flood 2014):

    z  = (x + i * 0x9E3779B97F4A7C15) mod 2^64
    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27;  z *= 0x94D049BB133111EB
    z ^= z >> 31

The mixed value seeds a numpy PCG64 generator.
"""

from __future__ import annotations

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15


def mix64(x: int) -> int:
    """splitmix64 finalizer; bijective on 64-bit integers."""
    z = x & MASK64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK64
    return (z ^ (z >> 31)) & MASK64


def task_seed(master: int, index: int) -> int:
    """64-bit seed for task `index` of a job with the given master seed."""
    return mix64((master + GOLDEN * (index + 1)) & MASK64)


def task_rng(master: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(task_seed(master, index)))


def stream_seed(master: int, label: int) -> int:
    """Derive a sub-master seed for an independent family of tasks.

    Used to keep per-radius (or per-bisection-step) task streams disjoint.
    """
    return mix64((master ^ mix64(label)) & MASK64)
