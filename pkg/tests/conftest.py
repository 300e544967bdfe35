import numpy as np
import pytest

from kleinqft.grid import Grid1D, Units
from kleinqft.modes import ParticleKind, build_basis


@pytest.fixture(scope="session")
def units():
    return Units()


@pytest.fixture(scope="session")
def small_grid(units):
    # Nyquist ~ 201 a.u.; enough for sub-Klein tests
    return Grid1D(256, 4.0, units)


@pytest.fixture(scope="session")
def fermion_basis(small_grid):
    return build_basis(small_grid, ParticleKind.FERMION)


@pytest.fixture(scope="session")
def boson_basis(small_grid):
    return build_basis(small_grid, ParticleKind.BOSON)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


def random_field(rng, grid):
    return rng.standard_normal((2, grid.n)) + 1j * rng.standard_normal((2, grid.n))


def barrier_on(grid, v0, width, eps):
    x = grid.x
    return 0.5 * v0 * (np.tanh((x + width / 2) / eps) - np.tanh((x - width / 2) / eps))
