import numpy as np
import pytest

from biximp import ModelParams


@pytest.fixture(scope="session")
def fig2_params():
    """Canonical multiple-bound-state parameters."""
    return ModelParams(N=40, J=1.0, D=4.1, E0=0.0, V0=4.0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260810)
