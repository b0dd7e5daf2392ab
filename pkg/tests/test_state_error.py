import math

import numpy as np
import pytest

from models.polarization import PoincareAngles
from util.metrics.state_error import angular_error, angular_errors, summarize_errors


def test_angular_error():
    a = PoincareAngles(1.0, 2.0)
    assert angular_error(a, a) == pytest.approx(0.0, abs=1e-12)
    assert angular_error(PoincareAngles(0.0, 0.0), PoincareAngles(math.pi, 0.0)) == pytest.approx(math.pi)
    assert angular_error(PoincareAngles(math.pi / 2, 0.1), PoincareAngles(math.pi / 2, 0.4)) == pytest.approx(0.3)
    # phi is meaningless at the poles
    assert angular_error(PoincareAngles(1e-13, 0.0), PoincareAngles(1e-13, 3.0)) == pytest.approx(0.0, abs=1e-12)


def test_summary():
    errors = angular_errors([PoincareAngles(1.0, 0.0)] * 3,
                            [PoincareAngles(1.0, 0.0), PoincareAngles(1.1, 0.0), PoincareAngles(1.3, 0.0)])
    assert np.allclose(errors, [0.0, 0.1, 0.3])
    summary = summarize_errors(errors)
    assert set(summary) == {'mean', 'max', 'p50', 'p90'}
    assert summary['max'] == pytest.approx(0.3)
    assert summary['p50'] == pytest.approx(0.1)
    assert summarize_errors(errors, percentiles=(99.5,)).keys() == {'mean', 'max', 'p99.5'}
    with pytest.raises(ValueError):
        summarize_errors([])
