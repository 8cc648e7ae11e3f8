import math

import numpy as np
import pytest

from rltbd.motion import build_ncv
from rltbd.selftest import default_sensor, small_sensor


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def sensor():
    return default_sensor()


@pytest.fixture(scope="session")
def small():
    return small_sensor()


@pytest.fixture(scope="session")
def ncv():
    return build_ncv(1.0, 0.1, 0.1)


@pytest.fixture
def truth():
    h = math.pi / 4
    return np.array([24000.0, 50 * math.cos(h), 0.0, 50 * math.sin(h)])
