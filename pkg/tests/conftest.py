import numpy as np
import pytest

from wakeforge.turbine import default_turbine_spec


@pytest.fixture(scope="session")
def spec():
    return default_turbine_spec()


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
