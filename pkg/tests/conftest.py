import math

import numpy as np
import pytest

from pointnls import PointInteractionOp, make_grid

ALPHA_UNIT = -1 / (4 * math.pi)  # n = 3 bound state at E = -1


@pytest.fixture(scope="session")
def grid3():
    return make_grid(3, 40.0, 4096)


@pytest.fixture(scope="session")
def grid2():
    return make_grid(2, 40.0, 4096)


@pytest.fixture(scope="session")
def op3b(grid3):
    """n = 3 with E_alpha = -1, default gauge 2."""
    return PointInteractionOp(grid3, ALPHA_UNIT)


@pytest.fixture(scope="session")
def op3(grid3):
    return PointInteractionOp(grid3, 1.0)


@pytest.fixture(scope="session")
def op2(grid2):
    return PointInteractionOp(grid2, 0.0)


def rel(a, b, grid):
    from pointnls import lp_norm

    return lp_norm(grid, np.asarray(a) - np.asarray(b), 2) / lp_norm(grid, b, 2)
