import numpy as np
import pytest

import thermal_wigner as tw


@pytest.fixture(scope="session")
def ho():
    """Isotropic oscillator omega = 1 as a quadratic model."""
    return tw.Quadratic(matrix=np.eye(2))


@pytest.fixture(scope="session")
def ho_nf():
    """The same oscillator in normal form, F(u) = u."""
    return tw.NormalForm(coeffs=(1.0,))


@pytest.fixture(scope="session")
def kerr():
    return tw.Kerr(omega=1.0)


@pytest.fixture(scope="session")
def quartic():
    """H = p^2/2 + q^2/2 + 0.1 q^4."""
    return tw.PolynomialPQ(terms=((0.5, 2, 0), (0.5, 0, 2), (0.1, 0, 4)))


@pytest.fixture(scope="session")
def quartic_oracle(quartic):
    """Exact spectrum of the quartic model (cached across the session)."""
    return tw.diagonalize(quartic, 256, n_report=64)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240813)
