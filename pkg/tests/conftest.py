import numpy as np
import pytest

import fermiwell as fw


@pytest.fixture(scope="session")
def small_grid():
    return fw.build_grid(150, -30.0, 30.0)


@pytest.fixture(scope="session")
def trap():
    return fw.TrapParams()


@pytest.fixture(scope="session")
def basis4(small_grid, trap):
    return fw.solve_one_body(small_grid, trap, 4)


@pytest.fixture(scope="session")
def basis6(small_grid, trap):
    return fw.solve_one_body(small_grid, trap, 6)


def random_state(basis_a, basis_b, seed=0):
    rng = np.random.default_rng(seed)
    shape = (len(basis_a), len(basis_b))
    coeff = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    coeff /= np.linalg.norm(coeff)
    return fw.CIState(basis_a, basis_b, coeff)
