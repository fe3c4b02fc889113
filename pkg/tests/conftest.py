import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gimbench import gimbalsim
from gimbench.config import load_config

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def scenario():
    return load_config()


@pytest.fixture(scope="session")
def pitch_axis():
    return gimbalsim.design_axis(107.7)


@pytest.fixture(scope="session")
def roll_axis():
    return gimbalsim.design_axis(87.1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
