"""Exciton spin dynamics: the write map, free precession and decay.

The spin is a Bloch vector in the same chart as the Stokes vector of the
writing pulse (s3 along H, s1 along D, s2 along R) plus the surviving exciton
population. Free evolution precesses the transverse components about the
H-V axis at the fine-structure frequency; `evolve_oracle` integrates the
equivalent 2x2 density matrix by small propagation steps for validation.
"""
import logging
import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import expm

from models.polarization import stokes_from_jones

logger = logging.getLogger(__name__)

# reduced Planck constant in micro-eV * ps
HBAR_UEV_PS = 658.2119569
BLOCH_TOL = 1e-12


class WritePath(Enum):
    GROUND_RESONANT = 'ground'
    EXCITED_RESONANT = 'excited'


@dataclass(frozen=True)
class DotParameters:
    """Physical constants of one dot.

    Parameters:
        delta_gs (float)       -- fine-structure splitting of the ground exciton (micro-eV)
        delta_es (float)       -- splitting of the excited exciton (micro-eV), metadata only
        tau_x (float)          -- exciton radiative lifetime (ps), may be inf
        t2 (float)             -- transverse spin coherence time (ps), inf for none
        relax_depol (float)    -- transverse shrink factor applied once on excited-state writes
        t1_spin (float)        -- longitudinal spin relaxation time (ps), inf for none
        pulse_duration (float) -- write pulse duration (ps)
        pulse_width (float)    -- write pulse spectral width (micro-eV)
    """
    delta_gs: float = 34.0
    delta_es: float = 60.0
    tau_x: float = 1000.0
    t2: float = math.inf
    relax_depol: float = 0.0
    t1_spin: float = math.inf
    pulse_duration: float = 10.0
    pulse_width: float = 100.0

    def __post_init__(self):
        for name in ('delta_gs', 'delta_es', 'tau_x', 't2', 't1_spin', 'pulse_duration', 'pulse_width'):
            value = float(getattr(self, name))
            if math.isnan(value) or value <= 0.0:
                raise ValueError(f'{name} must be positive, got {value}')
            object.__setattr__(self, name, value)
        for name in ('delta_gs', 'delta_es', 'pulse_duration', 'pulse_width'):
            if math.isinf(getattr(self, name)):
                raise ValueError(f'{name} must be finite')
        depol = float(self.relax_depol)
        if not 0.0 <= depol <= 1.0:
            raise ValueError(f'relax_depol must lie in [0, 1], got {depol}')
        object.__setattr__(self, 'relax_depol', depol)

    @property
    def period(self):
        return precession_period(self.delta_gs)


@dataclass(frozen=True)
class ExcitonState:
    bloch: tuple
    population: float = 1.0

    def __post_init__(self):
        bloch = tuple(float(v) for v in self.bloch)
        if len(bloch) != 3:
            raise ValueError(f'bloch vector needs 3 components, got {len(bloch)}')
        if math.sqrt(sum(v * v for v in bloch)) > 1.0 + BLOCH_TOL:
            raise ValueError(f'|bloch| > 1: {bloch}')
        population = float(self.population)
        if not 0.0 <= population <= 1.0:
            raise ValueError(f'population must lie in [0, 1], got {population}')
        object.__setattr__(self, 'bloch', bloch)
        object.__setattr__(self, 'population', population)

    @property
    def vector(self):
        return np.array(self.bloch)


def precession_period(delta):
    """Precession period T = h / delta in ps for a splitting in micro-eV."""
    delta = float(delta)
    if not delta > 0.0:
        raise ValueError(f'splitting must be positive, got {delta}')
    return 2.0 * math.pi * HBAR_UEV_PS / delta


def excited_period(params):
    return precession_period(params.delta_es)


def check_pulse_validity(params):
    """Warn when the instantaneous-pulse treatment of the write step is questionable."""
    messages = []
    period = params.period
    if params.pulse_duration > period / 10.0:
        messages.append(f'pulse duration {params.pulse_duration:g} ps exceeds T/10 = {period / 10.0:.3g} ps')
    if params.pulse_width < params.delta_gs:
        messages.append(f'pulse spectral width {params.pulse_width:g} ueV does not cover the '
                        f'{params.delta_gs:g} ueV fine-structure doublet')
    for message in messages:
        warnings.warn(message, RuntimeWarning, stacklevel=2)
    return messages


def write_state(pulse, path, params):
    s = stokes_from_jones(pulse).as_array()
    if WritePath(path) is WritePath.EXCITED_RESONANT:
        s[:2] *= 1.0 - params.relax_depol
    return ExcitonState(tuple(s), 1.0)


def _decay(dt, time_constant):
    return math.exp(-dt / time_constant)


def evolve(state, dt, params):
    """Advance the spin by dt ps of free evolution."""
    dt = float(dt)
    if dt < 0.0:
        raise ValueError(f'dt must be non-negative, got {dt}')
    beta = 2.0 * math.pi * dt / params.period
    cb, sb = math.cos(beta), math.sin(beta)
    s1, s2, s3 = state.bloch
    coherence = _decay(dt, params.t2)
    bloch = ((s1 * cb + s2 * sb) * coherence,
             (-s1 * sb + s2 * cb) * coherence,
             s3 * _decay(dt, params.t1_spin))
    return ExcitonState(bloch, state.population * _decay(dt, params.tau_x))


def bloch_trajectory(state, times, params):
    """Vectorised evolve: Bloch vectors (N, 3) and populations (N,) at the given delays."""
    t = np.asarray(times, dtype=float)
    if np.any(t < 0.0):
        raise ValueError('delays must be non-negative')
    beta = 2.0 * np.pi * t / params.period
    cb, sb = np.cos(beta), np.sin(beta)
    s1, s2, s3 = state.bloch
    coherence = np.exp(-t / params.t2)
    bloch = np.stack([(s1 * cb + s2 * sb) * coherence,
                      (-s1 * sb + s2 * cb) * coherence,
                      s3 * np.exp(-t / params.t1_spin)], axis=-1)
    return bloch, state.population * np.exp(-t / params.tau_x)


PAULI = (np.array([[0, 1], [1, 0]], dtype=complex),
         np.array([[0, -1j], [1j, 0]], dtype=complex),
         np.array([[1, 0], [0, -1]], dtype=complex))


def density_matrix(state):
    """Unnormalized density matrix population * (I + s.sigma) / 2."""
    rho = np.eye(2, dtype=complex)
    for s, sigma in zip(state.bloch, PAULI):
        rho = rho + s * sigma
    return 0.5 * state.population * rho


def state_from_density_matrix(rho):
    population = float(np.real(np.trace(rho)))
    if population <= 0.0:
        return ExcitonState((0.0, 0.0, 0.0), 0.0)
    bloch = [float(np.real(np.trace(rho @ sigma))) / population for sigma in PAULI]
    norm = math.sqrt(sum(v * v for v in bloch))
    if norm > 1.0:
        bloch = [v / norm for v in bloch]
    return ExcitonState(tuple(bloch), min(population, 1.0))


def liouvillian(params):
    """Generator of the damped precession acting on row-major vec(rho).

    H = diag(+delta/2, -delta/2) with drho/dt = +i[H, rho]/hbar, which takes
    L to Dbar in a quarter period; the sign of delta itself is unobservable.
    """
    ham = np.diag([0.5 * params.delta_gs, -0.5 * params.delta_gs]).astype(complex)
    eye = np.eye(2)
    gen = 1j / HBAR_UEV_PS * (np.kron(ham, eye) - np.kron(eye, ham.T))
    gen = gen - np.eye(4) / params.tau_x
    # off-diagonal coherences rho_01, rho_10
    dephase = np.diag([0.0, 1.0, 1.0, 0.0]) / params.t2
    # population difference rho_00 - rho_11 relaxes at 1/t1_spin
    flip = np.array([[-1, 0, 0, 1], [0, 0, 0, 0], [0, 0, 0, 0], [1, 0, 0, -1]]) / (2.0 * params.t1_spin)
    return gen - dephase + flip


def evolve_oracle(state, dt, params, step=None):
    """Propagate the density matrix in small steps of at most `step` ps.

    Each step applies the exact short-time propagator exp(L h); the default
    step is dt / 1000 and a step longer than dt / 100 is rejected.
    """
    dt = float(dt)
    if dt < 0.0:
        raise ValueError(f'dt must be non-negative, got {dt}')
    if dt == 0.0:
        return state
    step = dt / 1000.0 if step is None else float(step)
    if step <= 0.0 or step > dt / 100.0 * (1.0 + 1e-12):
        raise ValueError(f'step {step} ps too large for dt {dt} ps (at most dt/100)')
    n_steps = int(math.ceil(dt / step - 1e-9))
    propagator = expm(liouvillian(params) * (dt / n_steps))
    vec = density_matrix(state).reshape(-1)
    for _ in range(n_steps):
        vec = propagator @ vec
    return state_from_density_matrix(vec.reshape(2, 2))
