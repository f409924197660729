import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from asympolaron.oscillator import make_grid

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def wide_grid():
    """Wide Gauss-Legendre grid used as the quadrature oracle."""
    return make_grid(3001, 40.0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240601)
