import math

import numpy as np

from models.polarization import stokes_from_angles


def angular_error(estimate, truth):
    """Great-circle distance (rad) between two Bloch directions.

    Both arguments are PoincareAngles (or anything with theta/phi); the
    distance is taken between unit vectors so phi drops out at the poles.
    """
    a = stokes_from_angles(estimate).as_array()
    b = stokes_from_angles(truth).as_array()
    return math.atan2(float(np.linalg.norm(np.cross(a, b))), float(a @ b))


def angular_errors(estimates, truths):
    return np.array([angular_error(e, t) for e, t in zip(estimates, truths)])


def summarize_errors(errors, percentiles=(50, 90)):
    """Mean, max and the requested percentiles of a set of errors."""
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        raise ValueError('no errors to summarize')
    summary = {'mean': float(np.mean(errors)), 'max': float(np.max(errors))}
    for p in percentiles:
        summary[f'p{p:g}'] = float(np.percentile(errors, p))
    return summary
