import numpy as np
import pytest

from id_regret import levy
from id_regret.grid import Grid1D


@pytest.fixture(scope="session")
def gaussian():
    return levy.gaussian_model(1.0)


@pytest.fixture(scope="session")
def cauchy():
    return levy.cauchy_model(1.0)


@pytest.fixture(scope="session")
def gauss_grid():
    return Grid1D.symmetric(40.0, 1024)


@pytest.fixture(scope="session")
def wide_grid():
    return Grid1D.symmetric(400.0, 2048)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
