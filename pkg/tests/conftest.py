import numpy as np
import pytest

from models.dynamics import DotParameters, WritePath
from models.polarization import named_state
from models.readout import SignalParams, delay_scan


@pytest.fixture
def dot():
    return DotParameters()


@pytest.fixture
def clean():
    return SignalParams()


@pytest.fixture
def scan(dot, clean):
    """Noise-free delay scan over four periods, 401 points, by polarization names."""
    def make(write='L', read='D', path=WritePath.EXCITED_RESONANT, points=401, dot_params=None, sig=None):
        params = dot if dot_params is None else dot_params
        delays = np.linspace(0.0, 4.0 * params.period, points)
        return delay_scan(named_state(write), path, named_state(read), delays, params,
                          clean if sig is None else sig)
    return make
