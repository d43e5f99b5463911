import numpy as np
import pytest

from arnolddiff.model import ModelParams


@pytest.fixture
def params():
    """Reference parameter set used throughout (a3-normalized, safe regime)."""
    return ModelParams(0.3, 0.1, 1.0, 1.0, 1.0, eps=1e-3)


@pytest.fixture
def params_fig5():
    """Section-portrait parameter set (mu1 = 0.2, mu2 = 0.3)."""
    return ModelParams(0.2, 0.3, 1.0, 1.0, 1.0, eps=1e-3)


@pytest.fixture
def rng():
    return np.random.default_rng(20250810)
