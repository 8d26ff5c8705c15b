import numpy as np
import pytest

from shgspec.potential import Potential
from shgspec.spectrum import build_isolating, build_table

SPECTRAL_TOL = 1e-13


@pytest.fixture(scope="session")
def v_seed():
    """The seeded real test potential q = 0.1 cos(2 pi x), p = 0."""
    return Potential.cosine(0.1)


@pytest.fixture(scope="session")
def tab32(v_seed):
    return build_table(v_seed, 32, tol=SPECTRAL_TOL)


@pytest.fixture(scope="session")
def tab16(tab32):
    return tab32.truncated(16)


@pytest.fixture(scope="session")
def iso16(v_seed, tab16):
    return build_isolating(v_seed, tab16)


@pytest.fixture(scope="session")
def reflected(v_seed):
    vr = v_seed.reflected()
    tabr = build_table(vr, 16, tol=SPECTRAL_TOL)
    isor = build_isolating(vr, tabr)
    return vr, tabr, isor


@pytest.fixture(scope="session")
def v_zero():
    return Potential.zero()


@pytest.fixture(scope="session")
def tab0(v_zero):
    return build_table(v_zero, 8, tol=SPECTRAL_TOL)


@pytest.fixture(scope="session")
def iso0(v_zero, tab0):
    return build_isolating(v_zero, tab0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(0)
