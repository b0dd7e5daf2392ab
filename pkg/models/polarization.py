"""Polarization calculus over the (H, V) Jones basis.

Holds the canonical basis states, the Poincare-angle chart, Stokes vectors,
the orthogonal (complementary) state, the variable-retarder model and the
solver for the pair of liquid crystal retarders used to prepare arbitrary
polarizations. The conventions are published in CONVENTIONS.md.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from util import wrap_angle, TWO_PI

logger = logging.getLogger(__name__)

TOL = 1e-12
LCVR_FIDELITY = 1.0 - 1e-9

# fixed instrument geometry: H input, first LCVR at 45 degrees, second at 0
LCVR1_AXIS = math.pi / 4
LCVR2_AXIS = 0.0


class LCVRConvergenceError(RuntimeError):
    """The retarder pair could not reach the requested polarization."""


@dataclass(frozen=True)
class PolarizationState:
    """Normalized Jones vector with canonical global phase (cH real, >= 0)."""
    cH: complex
    cV: complex

    def __post_init__(self):
        cH, cV = complex(self.cH), complex(self.cV)
        norm = math.sqrt(abs(cH) ** 2 + abs(cV) ** 2)
        if not math.isfinite(norm) or norm == 0.0:
            raise ValueError(f'cannot normalize Jones vector ({cH}, {cV})')
        cH, cV = cH / norm, cV / norm
        if abs(cH) < TOL:
            cH, cV = 0j, 1 + 0j
        else:
            rot = abs(cH) / cH
            cH, cV = complex(abs(cH), 0.0), cV * rot
        object.__setattr__(self, 'cH', cH)
        object.__setattr__(self, 'cV', cV)

    @classmethod
    def from_vector(cls, vec):
        vec = np.asarray(vec, dtype=complex)
        assert vec.shape == (2,), vec.shape
        return cls(complex(vec[0]), complex(vec[1]))

    def as_vector(self):
        return np.array([self.cH, self.cV], dtype=complex)

    def isclose(self, other, tol=1e-9):
        return fidelity(self, other) >= 1.0 - tol


@dataclass(frozen=True)
class PoincareAngles:
    """(theta, phi) on the Poincare sphere.

    theta is measured from H (0) to V (pi); phi is the equatorial angle
    measured from L and increasing toward Dbar, the precession direction.
    """
    theta: float
    phi: float

    def __post_init__(self):
        theta, phi = float(self.theta), float(self.phi)
        if not (-TOL <= theta <= math.pi + TOL):
            raise ValueError(f'theta={theta} outside [0, pi]')
        theta = min(max(theta, 0.0), math.pi)
        phi = wrap_angle(phi)
        if theta < TOL or math.pi - theta < TOL:
            phi = 0.0
        object.__setattr__(self, 'theta', theta)
        object.__setattr__(self, 'phi', phi)


@dataclass(frozen=True)
class StokesVector:
    s1: float
    s2: float
    s3: float

    def as_array(self):
        return np.array([self.s1, self.s2, self.s3])

    def dot(self, other):
        return float(self.as_array() @ other.as_array())

    def __neg__(self):
        return StokesVector(-self.s1, -self.s2, -self.s3)


@dataclass(frozen=True)
class Retarder:
    """Linear retarder: retardance in [0, 2pi), fast axis angle from H in real space."""
    retardance: float
    fast_axis: float

    def __post_init__(self):
        object.__setattr__(self, 'retardance', wrap_angle(float(self.retardance)))
        object.__setattr__(self, 'fast_axis', float(self.fast_axis))

    def matrix(self):
        """R(-a) . diag(exp(-i retardance), 1) . R(a)"""
        frame = _rotator(self.fast_axis)
        phase = np.diag([np.exp(-1j * self.retardance), 1.0 + 0j])
        return frame.T @ phase @ frame


def _rotator(angle):
    # maps lab-frame components into the frame whose first axis is at `angle`
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, s], [-s, c]])


_SQ2 = 1.0 / math.sqrt(2.0)
NAMED_STATES = {
    'H': PolarizationState(1.0, 0.0),
    'V': PolarizationState(0.0, 1.0),
    'D': PolarizationState(_SQ2, _SQ2),
    'Dbar': PolarizationState(_SQ2, -_SQ2),
    'R': PolarizationState(_SQ2, 1j * _SQ2),
    'L': PolarizationState(_SQ2, -1j * _SQ2),
}


def named_state(name):
    try:
        return NAMED_STATES[name]
    except KeyError:
        raise ValueError(f'unknown polarization name {name!r}, expected one of {list(NAMED_STATES)}') from None


def name_of(state, tol=1e-12):
    for name, ref in NAMED_STATES.items():
        if fidelity(state, ref) >= 1.0 - tol:
            return name
    return None


def parse_polarization(label):
    """Polarization from a name (H, V, D, Dbar, R, L) or a 'theta:phi' pair in radians."""
    label = str(label).strip()
    if label in NAMED_STATES:
        return NAMED_STATES[label]
    if ':' in label:
        theta, phi = label.split(':', 1)
        try:
            angles = PoincareAngles(float(theta), float(phi))
        except ValueError as e:
            raise ValueError(f'bad polarization {label!r}: {e}') from None
        return jones_from_angles(angles)
    raise ValueError(f'bad polarization {label!r}: expected a name in {list(NAMED_STATES)} or theta:phi')


def format_polarization(state):
    name = name_of(state)
    if name is not None:
        return name
    angles = angles_from_jones(state)
    return f'{angles.theta!r}:{angles.phi!r}'


def jones_from_angles(angles):
    half = angles.theta / 2.0
    alpha = wrap_angle(-(math.pi / 2.0 + angles.phi))
    return PolarizationState(math.cos(half), np.exp(1j * alpha) * math.sin(half))


def angles_from_jones(state):
    aH, aV = abs(state.cH), abs(state.cV)
    theta = 2.0 * math.atan2(aV, aH)
    if aH < TOL or aV < TOL:
        return PoincareAngles(theta, 0.0)
    alpha = math.atan2(state.cV.imag, state.cV.real) - math.atan2(state.cH.imag, state.cH.real)
    return PoincareAngles(theta, -alpha - math.pi / 2.0)


def orthogonal(state):
    """The complementary polarization: antipode on the Poincare sphere."""
    return PolarizationState(-state.cV.conjugate(), state.cH.conjugate())


def stokes_from_jones(state):
    cross = state.cH.conjugate() * state.cV
    return StokesVector(2.0 * cross.real, 2.0 * cross.imag,
                        abs(state.cH) ** 2 - abs(state.cV) ** 2)


def stokes_from_angles(angles):
    st, ct = math.sin(angles.theta), math.cos(angles.theta)
    return StokesVector(-st * math.sin(angles.phi), -st * math.cos(angles.phi), ct)


def jones_from_stokes(stokes):
    s = np.asarray(stokes.as_array() if isinstance(stokes, StokesVector) else stokes, dtype=float)
    norm = np.linalg.norm(s)
    if norm == 0.0:
        raise ValueError('zero Stokes vector has no pure-state representative')
    s1, s2, s3 = s / norm
    theta = math.acos(min(max(s3, -1.0), 1.0))
    return jones_from_angles(PoincareAngles(theta, math.atan2(-s1, -s2)))


def fidelity(a, b):
    """|<a|b>|^2"""
    return float(abs(np.vdot(a.as_vector(), b.as_vector())) ** 2)


def poincare_distance(a, b):
    """Great-circle distance between the Stokes vectors of two states."""
    sa, sb = stokes_from_jones(a).as_array(), stokes_from_jones(b).as_array()
    return math.atan2(np.linalg.norm(np.cross(sa, sb)), float(sa @ sb))


def spin_amplitudes(state):
    """Amplitudes on the electron/heavy-hole product states.

    Returns (a, b) with state = a |up-hole, down-electron> + b |down-hole, up-electron>,
    the first product state carrying R and the second L.
    """
    vec = state.as_vector()
    return (complex(np.vdot(NAMED_STATES['R'].as_vector(), vec)),
            complex(np.vdot(NAMED_STATES['L'].as_vector(), vec)))


def from_spin_amplitudes(a_up_down, a_down_up):
    vec = a_up_down * NAMED_STATES['R'].as_vector() + a_down_up * NAMED_STATES['L'].as_vector()
    return PolarizationState.from_vector(vec)


def apply_retarder(r, state):
    return PolarizationState.from_vector(r.matrix() @ state.as_vector())


def rotate_frame(state, angle):
    """Rotate the polarization by `angle` in real space (setup vs. dot axes)."""
    return PolarizationState.from_vector(_rotator(-angle) @ state.as_vector())


def lcvr_forward(retardance1, retardance2, source=None):
    source = NAMED_STATES['H'] if source is None else source
    state = apply_retarder(Retarder(retardance1, LCVR1_AXIS), source)
    return apply_retarder(Retarder(retardance2, LCVR2_AXIS), state)


def solve_lcvr_pair(target):
    """Retardances (r1, r2) of the LCVR pair that turn H into `target`.

    The first retarder (axis pi/4) moves H along the H-L-V meridian by theta,
    the second (axis 0) rotates about the H-V axis, taking phi to phi - r2.
    The closed form is checked against the forward model and polished by
    least squares if rounding leaves it short of the required fidelity.
    """
    angles = angles_from_jones(target)
    r1, r2 = wrap_angle(angles.theta), wrap_angle(-angles.phi)
    if fidelity(lcvr_forward(r1, r2), target) >= LCVR_FIDELITY:
        return r1, r2

    goal = stokes_from_jones(target).as_array()

    def residual(x):
        return stokes_from_jones(lcvr_forward(x[0], x[1])).as_array() - goal

    sol = least_squares(residual, x0=[r1, r2], xtol=1e-15, ftol=1e-15, gtol=1e-15)
    r1, r2 = wrap_angle(sol.x[0]), wrap_angle(sol.x[1])
    reached = fidelity(lcvr_forward(r1, r2), target)
    if reached < LCVR_FIDELITY:
        raise LCVRConvergenceError(
            f'LCVR pair reached fidelity {reached:.3e} for {format_polarization(target)}')
    logger.debug('LCVR solution polished by least squares (%d evaluations)', sol.nfev)
    return r1, r2


def realize_polarization(target, lcvr_offset=0.0, axis_offset=0.0):
    """Polarization delivered to the dot when the LCVR pair is programmed for `target`.

    lcvr_offset is a retardance miscalibration added to both retarders,
    axis_offset a rotation between the setup axes and the dot's axes.
    """
    state = target
    if lcvr_offset != 0.0:
        r1, r2 = solve_lcvr_pair(target)
        state = lcvr_forward(r1 + lcvr_offset, r2 + lcvr_offset)
    if axis_offset != 0.0:
        state = rotate_frame(state, axis_offset)
    return state
