import pytest
from hypothesis import strategies as st

from qbrownian import FockBasis, GridBasis, PhysParams
from qbrownian.operators import build_fock_operators, build_grid_operators


@pytest.fixture(scope="session")
def params():
    return PhysParams(C=0.1)


@pytest.fixture(scope="session")
def fock20(params):
    basis = FockBasis(params=params, n=20)
    ops = build_fock_operators(basis)
    return basis, ops["q"], ops["p"]


@pytest.fixture(scope="session")
def grid64(params):
    basis = GridBasis(params=params, x_min=-8.0, x_max=8.0, n=64)
    ops = build_grid_operators(basis)
    return basis, ops["q"], ops["p"]


def random_complex(rng, d):
    return rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))


def random_density(rng, d):
    X = random_complex(rng, d)
    rho = X @ X.conj().T
    return rho / rho.trace().real


# hypothesis strategies ------------------------------------------------------

def seeds():
    return st.integers(min_value=0, max_value=2**31 - 1)


def small_dims():
    return st.integers(min_value=2, max_value=6)
