import numpy as np
import pytest

from rough_imager.geometry import make_preset
from rough_imager.waves import IncidentConfig


@pytest.fixture
def bump():
    return make_preset("example1")


@pytest.fixture
def oblique():
    return IncidentConfig(5.0, (-np.pi / 6,))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
