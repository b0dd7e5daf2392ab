"""The read step: biexciton projection, PL signal model and the scan generators.

A probe pulse is absorbed on the cross-linear biexciton resonance with a
probability proportional to the projection of the exciton spin onto the
polarization orthogonal to the probe. Scans evaluate that probability over a
grid of delays or write angles, scale it to counts and optionally add
synthetic detector noise. Noise draws are keyed by (seed, point index) so a
curve is reproducible regardless of evaluation order.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from models.dynamics import DotParameters, WritePath, bloch_trajectory, evolve, write_state
from models.polarization import (PoincareAngles, PolarizationState, fidelity, format_polarization,
                                 jones_from_angles, jones_from_stokes, orthogonal,
                                 realize_polarization, stokes_from_jones)

logger = logging.getLogger(__name__)


class NoiseKind(Enum):
    NONE = 'none'
    POISSON = 'poisson'
    GAUSSIAN = 'gaussian'


class AngleSweep(Enum):
    PHI = 'phi'        # theta fixed at pi/2
    THETA = 'theta'    # phi fixed at 0, continued through V to phi = pi


class ScanKind(Enum):
    DELAY = 'delay'
    ANGLE = 'angle'


@dataclass(frozen=True)
class SignalParams:
    """Detection model: counts = scale * probability + background, then noise.

    sigma is the absolute standard deviation (counts) of Gaussian noise.
    """
    scale: float = 10000.0
    background: float = 0.0
    noise: NoiseKind = NoiseKind.NONE
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        scale, background, sigma = float(self.scale), float(self.background), float(self.sigma)
        if not (math.isfinite(scale) and scale > 0.0):
            raise ValueError(f'scale must be positive, got {scale}')
        if not (math.isfinite(background) and background >= 0.0):
            raise ValueError(f'background must be non-negative, got {background}')
        if not (math.isfinite(sigma) and sigma >= 0.0):
            raise ValueError(f'sigma must be non-negative, got {sigma}')
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f'seed must be a non-negative integer, got {self.seed}')
        object.__setattr__(self, 'scale', scale)
        object.__setattr__(self, 'background', background)
        object.__setattr__(self, 'sigma', sigma)
        object.__setattr__(self, 'noise', NoiseKind(self.noise))
        object.__setattr__(self, 'seed', int(self.seed))


@dataclass(frozen=True)
class CurveMeta:
    """Everything needed to regenerate (or fit) a curve.

    write_pol is None for angle scans, where the write polarization varies.
    delay is the fixed delay of an angle scan and None for delay scans.
    """
    read_pol: PolarizationState
    scan: ScanKind
    write_pol: Optional[PolarizationState] = None
    path: WritePath = WritePath.GROUND_RESONANT
    dot: DotParameters = field(default_factory=DotParameters)
    signal: SignalParams = field(default_factory=SignalParams)
    vary: Optional[AngleSweep] = None
    delay: Optional[float] = None
    lcvr_offset: float = 0.0
    axis_offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'scan', ScanKind(self.scan))
        object.__setattr__(self, 'path', WritePath(self.path))
        if self.scan is ScanKind.DELAY and self.write_pol is None:
            raise ValueError('delay scan metadata needs a write polarization')
        if self.scan is ScanKind.ANGLE:
            if self.vary is None or self.delay is None:
                raise ValueError('angle scan metadata needs vary and delay')
            object.__setattr__(self, 'vary', AngleSweep(self.vary))

    @property
    def unit(self):
        return 'ps' if self.scan is ScanKind.DELAY else 'rad'

    @property
    def label(self):
        write = 'varied' if self.write_pol is None else format_polarization(self.write_pol)
        return f'{write}→{format_polarization(self.read_pol)} ({self.path.value})'


@dataclass(eq=False)
class SignalCurve:
    abscissa: np.ndarray
    values: np.ndarray
    meta: CurveMeta

    def __post_init__(self):
        self.abscissa = np.asarray(self.abscissa, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.abscissa.ndim != 1 or self.abscissa.shape != self.values.shape:
            raise ValueError(f'abscissa {self.abscissa.shape} and values {self.values.shape} differ')
        if len(self.abscissa) == 0:
            raise ValueError('empty curve')
        if np.any(np.diff(self.abscissa) <= 0.0):
            raise ValueError('abscissa must be strictly increasing')

    def __len__(self):
        return len(self.abscissa)


def projection_probability(state, probe):
    """population * (1 + bloch . stokes(orthogonal(probe))) / 2"""
    s = stokes_from_jones(orthogonal(probe)).as_array()
    p = 0.5 * state.population * (1.0 + float(np.dot(state.bloch, s)))
    return min(max(p, 0.0), state.population)


def amplitude_projection(state, probe):
    """Projection computed from amplitudes: the pure part of the spin is rebuilt as a Jones
    vector and overlapped with the orthogonal probe, the unpolarized remainder counts half."""
    bloch = np.asarray(state.bloch)
    purity = float(np.linalg.norm(bloch))
    if purity == 0.0:
        return 0.5 * state.population
    psi = jones_from_stokes(bloch)
    overlap = fidelity(orthogonal(probe), psi)
    return state.population * (min(purity, 1.0) * overlap + 0.5 * (1.0 - min(purity, 1.0)))


def _noisy(value, sig, index):
    if sig.noise is NoiseKind.NONE:
        return float(value)
    rng = np.random.default_rng([sig.seed, index])
    if sig.noise is NoiseKind.POISSON:
        if value < 0.0:
            raise ValueError(f'Poisson noise needs a non-negative mean, got {value}')
        return float(rng.poisson(value))
    return float(value + rng.normal(0.0, sig.sigma))


def pl_signal(write, path, probe, delay, dot, sig, index=0):
    """Detected biexciton PL counts for one (write, probe, delay) point.

    `index` keys the noise draw so pointwise and scan evaluation agree.
    """
    if delay < 0.0:
        raise ValueError(f'delay must be non-negative, got {delay}')
    state = evolve(write_state(write, path, dot), delay, dot)
    value = sig.scale * projection_probability(state, probe) + sig.background
    return _noisy(value, sig, index)


def _check_grid(points, name):
    points = np.asarray(points, dtype=float)
    if points.ndim != 1 or len(points) == 0:
        raise ValueError(f'{name} must be a non-empty 1-D sequence')
    if not np.all(np.isfinite(points)):
        raise ValueError(f'{name} must be finite')
    if np.any(np.diff(points) <= 0.0):
        raise ValueError(f'{name} must be strictly increasing')
    return points


def _probabilities(state, times, probe, dot):
    bloch, population = bloch_trajectory(state, times, dot)
    s = stokes_from_jones(orthogonal(probe)).as_array()
    p = 0.5 * population * (1.0 + bloch @ s)
    return np.clip(p, 0.0, population)


def delay_scan(write, path, probe, delays, dot, sig, lcvr_offset=0.0, axis_offset=0.0):
    """PL counts against the write/read delay.

    With non-zero offsets the write pulse is the polarization a miscalibrated
    LCVR pair delivers when programmed for `write`.
    """
    delays = _check_grid(delays, 'delays')
    if delays[0] < 0.0:
        raise ValueError(f'delays must be non-negative, got {delays[0]}')
    path = WritePath(path)
    delivered = realize_polarization(write, lcvr_offset, axis_offset)
    state = write_state(delivered, path, dot)
    values = sig.scale * _probabilities(state, delays, probe, dot) + sig.background
    meta = CurveMeta(read_pol=probe, scan=ScanKind.DELAY, write_pol=write, path=path, dot=dot,
                     signal=sig, lcvr_offset=float(lcvr_offset), axis_offset=float(axis_offset))
    logger.debug('delay scan %s: %d points up to %.3g ps', meta.label, len(delays), delays[-1])
    return add_noise(SignalCurve(delays, values, meta), sig)


def sweep_angles(vary, angle):
    """Write polarization at one point of an angle sweep.

    A theta sweep past pi continues over the far side of the sphere (phi = pi)
    so a 0..2pi sweep traces the whole H-L-V-R great circle.
    """
    vary = AngleSweep(vary)
    if vary is AngleSweep.PHI:
        return PoincareAngles(math.pi / 2.0, angle)
    if not -1e-12 <= angle <= 2.0 * math.pi + 1e-12:
        raise ValueError(f'theta sweep angle {angle} outside [0, 2pi]')
    if angle > math.pi:
        return PoincareAngles(2.0 * math.pi - angle, math.pi)
    return PoincareAngles(angle, 0.0)


def angle_scan(vary, angles, probe, delay, path, dot, sig, lcvr_offset=0.0, axis_offset=0.0):
    angles = _check_grid(angles, 'angles')
    if delay < 0.0:
        raise ValueError(f'delay must be non-negative, got {delay}')
    vary, path = AngleSweep(vary), WritePath(path)
    values = np.empty(len(angles))
    for i, angle in enumerate(angles):
        write = realize_polarization(jones_from_angles(sweep_angles(vary, angle)), lcvr_offset, axis_offset)
        state = evolve(write_state(write, path, dot), delay, dot)
        values[i] = sig.scale * projection_probability(state, probe) + sig.background
    meta = CurveMeta(read_pol=probe, scan=ScanKind.ANGLE, path=path, dot=dot, signal=sig, vary=vary,
                     delay=float(delay), lcvr_offset=float(lcvr_offset), axis_offset=float(axis_offset))
    return add_noise(SignalCurve(angles, values, meta), sig)


def add_noise(curve, sig):
    """Apply the noise model of `sig` to every point; the point index keys the draw."""
    if sig.noise is NoiseKind.NONE:
        values = curve.values.copy()
    else:
        values = np.array([_noisy(v, sig, i) for i, v in enumerate(curve.values)])
    return SignalCurve(curve.abscissa.copy(), values, replace(curve.meta, signal=sig))


def signal_contrast(curve):
    """Michelson contrast of the curve above its background."""
    top, bottom = float(np.max(curve.values)), float(np.min(curve.values))
    level = top + bottom - 2.0 * curve.meta.signal.background
    if level <= 0.0:
        return 0.0
    return (top - bottom) / level
