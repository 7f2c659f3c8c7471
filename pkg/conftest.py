import numpy as np
import pytest

from model import Grid, KineticState


@pytest.fixture
def grid64():
    return Grid(64)


@pytest.fixture
def smooth_state(grid64):
    """Strictly positive, non-symmetric datum on 64 cells."""
    x = grid64.centers
    return KineticState(1.0 + 0.5 * np.cos(2 * np.pi * x), 0.8 + 0.3 * np.sin(2 * np.pi * x))


@pytest.fixture
def aligned_state(grid64):
    """Datum well inside the aligned-limit conditions for gamma = 2."""
    x = grid64.centers
    return KineticState(5.0 + np.cos(2 * np.pi * x), 0.5 + 0.2 * np.cos(2 * np.pi * x))
