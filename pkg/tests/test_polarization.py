import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from models.polarization import (NAMED_STATES, PoincareAngles, PolarizationState, Retarder, StokesVector,
                                 angles_from_jones, apply_retarder, fidelity, format_polarization,
                                 from_spin_amplitudes, jones_from_angles, jones_from_stokes, lcvr_forward,
                                 name_of, named_state, orthogonal, parse_polarization, poincare_distance,
                                 realize_polarization, rotate_frame, solve_lcvr_pair, spin_amplitudes,
                                 stokes_from_angles, stokes_from_jones)

SQ2 = 1.0 / math.sqrt(2.0)

STOKES = {
    'H': (0.0, 0.0, 1.0),
    'V': (0.0, 0.0, -1.0),
    'D': (1.0, 0.0, 0.0),
    'Dbar': (-1.0, 0.0, 0.0),
    'R': (0.0, 1.0, 0.0),
    'L': (0.0, -1.0, 0.0),
}
ANGLES = {
    'L': (math.pi / 2, 0.0),
    'Dbar': (math.pi / 2, math.pi / 2),
    'R': (math.pi / 2, math.pi),
    'D': (math.pi / 2, 3 * math.pi / 2),
    'H': (0.0, 0.0),
    'V': (math.pi, 0.0),
}
ORTHOGONAL = {'H': 'V', 'V': 'H', 'D': 'Dbar', 'Dbar': 'D', 'R': 'L', 'L': 'R'}


def random_states(n, seed=0):
    rng = np.random.default_rng(seed)
    vecs = rng.normal(size=(n, 2)) + 1j * rng.normal(size=(n, 2))
    return [PolarizationState.from_vector(v) for v in vecs]


def test_canonical_phase():
    state = PolarizationState(1j, -1.0)
    assert state.cH.imag == 0.0 and state.cH.real > 0.0
    assert_allclose([state.cH, state.cV], [SQ2, 1j * SQ2], atol=1e-15)
    assert PolarizationState(1e-14, 2.0) == PolarizationState(0.0, 1.0)


def test_zero_vector_rejected():
    with pytest.raises(ValueError):
        PolarizationState(0.0, 0.0)


@pytest.mark.parametrize('name', list(NAMED_STATES))
def test_named_stokes(name):
    assert_allclose(stokes_from_jones(named_state(name)).as_array(), STOKES[name], atol=1e-15)


@pytest.mark.parametrize('name', list(NAMED_STATES))
def test_named_angles(name):
    theta, phi = ANGLES[name]
    angles = angles_from_jones(named_state(name))
    assert angles.theta == pytest.approx(theta, abs=1e-12)
    assert angles.phi == pytest.approx(phi, abs=1e-12)
    assert jones_from_angles(PoincareAngles(theta, phi)).isclose(named_state(name), tol=1e-12)


@pytest.mark.parametrize('name', list(NAMED_STATES))
def test_orthogonal_named(name):
    assert name_of(orthogonal(named_state(name))) == ORTHOGONAL[name]


def test_orthogonal_is_antipode():
    for state in random_states(50):
        assert fidelity(state, orthogonal(state)) == pytest.approx(0.0, abs=1e-15)
        assert_allclose(stokes_from_jones(orthogonal(state)).as_array(),
                        (-stokes_from_jones(state)).as_array(), atol=1e-12)


def test_angles_roundtrip_random():
    for state in random_states(200, seed=1):
        back = jones_from_angles(angles_from_jones(state))
        assert back.isclose(state, tol=1e-12)
        assert_allclose(stokes_from_angles(angles_from_jones(state)).as_array(),
                        stokes_from_jones(state).as_array(), atol=1e-12)


def test_stokes_roundtrip_random():
    for state in random_states(100, seed=2):
        assert jones_from_stokes(stokes_from_jones(state)).isclose(state, tol=1e-12)


def test_jones_from_stokes_normalizes_and_rejects_zero():
    assert name_of(jones_from_stokes([0.0, 0.0, 2.0])) == 'H'
    with pytest.raises(ValueError):
        jones_from_stokes(StokesVector(0.0, 0.0, 0.0))


def test_poincare_angle_domain():
    assert PoincareAngles(0.0, 1.3).phi == 0.0
    assert PoincareAngles(math.pi, 1.3).phi == 0.0
    assert PoincareAngles(1.0, -0.5).phi == pytest.approx(2 * math.pi - 0.5)
    with pytest.raises(ValueError):
        PoincareAngles(4.0, 0.0)


def test_parse_and_format():
    assert parse_polarization(' Dbar ') is NAMED_STATES['Dbar']
    state = parse_polarization('1.0:2.0')
    assert angles_from_jones(state).theta == pytest.approx(1.0)
    assert angles_from_jones(state).phi == pytest.approx(2.0)
    assert parse_polarization(format_polarization(state)).isclose(state, tol=1e-14)
    assert format_polarization(parse_polarization('1.5707963267948966:0')) == 'L'


@pytest.mark.parametrize('label', ['X', '', '4.0:0.0', 'a:b', '1.0'])
def test_parse_rejects(label):
    with pytest.raises(ValueError):
        parse_polarization(label)


def test_named_state_unknown():
    with pytest.raises(ValueError, match='unknown polarization'):
        named_state('Q')


def test_fidelity_and_distance():
    assert fidelity(NAMED_STATES['D'], NAMED_STATES['Dbar']) == pytest.approx(0.0, abs=1e-15)
    assert fidelity(NAMED_STATES['H'], NAMED_STATES['R']) == pytest.approx(0.5)
    assert poincare_distance(NAMED_STATES['H'], NAMED_STATES['V']) == pytest.approx(math.pi)
    assert poincare_distance(NAMED_STATES['L'], NAMED_STATES['D']) == pytest.approx(math.pi / 2)


def test_spin_amplitudes():
    assert_allclose(spin_amplitudes(NAMED_STATES['R']), (1.0, 0.0), atol=1e-15)
    assert_allclose(spin_amplitudes(NAMED_STATES['L']), (0.0, 1.0), atol=1e-15)
    assert_allclose(spin_amplitudes(NAMED_STATES['H']), (SQ2, SQ2), atol=1e-15)
    assert_allclose(spin_amplitudes(NAMED_STATES['V']), (-1j * SQ2, 1j * SQ2), atol=1e-15)
    assert from_spin_amplitudes(SQ2, 1j * SQ2).isclose(NAMED_STATES['D'], tol=1e-14)
    assert from_spin_amplitudes(SQ2, -1j * SQ2).isclose(NAMED_STATES['Dbar'], tol=1e-14)


def test_retarder_unitary_and_half_wave():
    for retardance, axis in [(0.3, 0.1), (math.pi, 1.2), (2.0, -0.7)]:
        m = Retarder(retardance, axis).matrix()
        assert_allclose(m.conj().T @ m, np.eye(2), atol=1e-14)
    # half-wave plate at 22.5 degrees turns H into D
    assert name_of(apply_retarder(Retarder(math.pi, math.pi / 8), NAMED_STATES['H'])) == 'D'
    assert Retarder(2 * math.pi + 0.25, 0.0).retardance == pytest.approx(0.25)


def test_quarter_wave_makes_circular():
    out = apply_retarder(Retarder(math.pi / 2, math.pi / 4), NAMED_STATES['H'])
    assert name_of(out, tol=1e-12) in ('R', 'L')


def test_rotate_frame():
    assert name_of(rotate_frame(NAMED_STATES['H'], math.pi / 4)) == 'D'
    assert name_of(rotate_frame(NAMED_STATES['H'], math.pi / 2)) == 'V'


@pytest.mark.parametrize('name', list(NAMED_STATES))
def test_solve_lcvr_named(name):
    r1, r2 = solve_lcvr_pair(named_state(name))
    assert 0.0 <= r1 < 2 * math.pi and 0.0 <= r2 < 2 * math.pi
    assert fidelity(lcvr_forward(r1, r2), named_state(name)) >= 1.0 - 1e-9


def test_solve_lcvr_random_targets():
    for state in random_states(1000, seed=3):
        r1, r2 = solve_lcvr_pair(state)
        assert fidelity(lcvr_forward(r1, r2), state) >= 1.0 - 1e-9


def test_first_retarder_walks_the_meridian():
    for gamma in np.linspace(0.0, math.pi, 7):
        angles = angles_from_jones(lcvr_forward(gamma, 0.0))
        assert angles.theta == pytest.approx(gamma, abs=1e-12)
        if 1e-9 < gamma < math.pi - 1e-9:
            assert abs(math.remainder(angles.phi, 2 * math.pi)) < 1e-12


def test_realize_polarization_offsets():
    target = NAMED_STATES['D']
    assert realize_polarization(target) is target
    off = realize_polarization(target, lcvr_offset=0.05)
    assert 1.0 - 1e-2 < fidelity(off, target) < 1.0 - 1e-6
    rotated = realize_polarization(NAMED_STATES['H'], axis_offset=math.pi / 2)
    assert name_of(rotated) == 'V'


@pytest.mark.parametrize('seed', range(5))
def test_distance_follows_overlap(seed):
    rng = np.random.default_rng(seed)
    for _ in range(200):
        a, b = (jones_from_angles(PoincareAngles(rng.uniform(0.0, math.pi), rng.uniform(0.0, 2 * math.pi)))
                for _ in range(2))
        expected = math.acos(min(max(2.0 * fidelity(a, b) - 1.0, -1.0), 1.0))
        assert poincare_distance(a, b) == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize('axis', [0.0, 0.3, math.pi / 4, 1.1, -2.0])
def test_retardances_add_at_a_common_axis(axis):
    quarter = Retarder(math.pi / 2, axis).matrix()
    assert_allclose(quarter @ quarter, Retarder(math.pi, axis).matrix(), atol=1e-14)
    assert_allclose(Retarder(0.4, axis).matrix() @ Retarder(1.7, axis).matrix(),
                    Retarder(2.1, axis).matrix(), atol=1e-14)
