import numpy as np
import pytest

from wfset import coeffs


@pytest.fixture
def flat1():
    return coeffs.flat(1)


@pytest.fixture
def bump1():
    return coeffs.bump(1, epsilon=0.1, potential_epsilon=0.1, rho=1.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
