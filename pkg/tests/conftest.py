import numpy as np
import pytest

from longarm.gw import OffspringDist
from longarm.kernel import KernelSpec, build_kernel


@pytest.fixture(scope="session")
def kernel_d1():
    """Heavy-tailed d=1 kernel used throughout the one-arm experiments."""
    return build_kernel(KernelSpec(d=1, alpha=0.8, lam=1.0), tab_radius=4096)


@pytest.fixture(scope="session")
def kernel_d1_light():
    return build_kernel(KernelSpec(d=1, alpha=3.5, lam=1.0), tab_radius=512)


@pytest.fixture(scope="session")
def kernel_d3():
    return build_kernel(KernelSpec(d=3, alpha=5.0, lam=1.0), tab_radius=64)


@pytest.fixture(scope="session")
def binary_off():
    return OffspringDist.binary()


@pytest.fixture(scope="session")
def geom_off():
    return OffspringDist.geometric_half()


@pytest.fixture
def rng():
    return np.random.default_rng(20260824)
