import math
from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose

from models.dynamics import DotParameters, ExcitonState, WritePath, write_state
from models.polarization import NAMED_STATES, PoincareAngles, jones_from_angles, name_of, named_state, orthogonal
from models.readout import (AngleSweep, CurveMeta, NoiseKind, ScanKind, SignalCurve, SignalParams, add_noise,
                            amplitude_projection, angle_scan, delay_scan, pl_signal, projection_probability,
                            signal_contrast, sweep_angles)


def spin(name):
    return write_state(NAMED_STATES[name], WritePath.GROUND_RESONANT, DotParameters())


@pytest.mark.parametrize('written, probe, expected', [
    ('L', 'R', 1.0), ('L', 'L', 0.0), ('L', 'D', 0.5),
    ('R', 'L', 1.0), ('V', 'H', 1.0), ('H', 'H', 0.0), ('D', 'Dbar', 1.0),
])
def test_projection_reads_orthogonal_state(written, probe, expected):
    assert projection_probability(spin(written), NAMED_STATES[probe]) == pytest.approx(expected, abs=1e-15)


def test_amplitude_projection_agrees():
    rng = np.random.default_rng(0)
    for _ in range(200):
        v = rng.normal(size=3)
        v *= rng.uniform(0.0, 1.0) / np.linalg.norm(v)
        state = ExcitonState(tuple(v), rng.uniform(0.0, 1.0))
        probe = NAMED_STATES[rng.choice(list(NAMED_STATES))]
        assert amplitude_projection(state, probe) == pytest.approx(projection_probability(state, probe),
                                                                   abs=1e-12)
    assert amplitude_projection(ExcitonState((0.0, 0.0, 0.0), 0.8), NAMED_STATES['D']) == pytest.approx(0.4)


def test_signal_params_validation():
    with pytest.raises(ValueError):
        SignalParams(scale=0.0)
    with pytest.raises(ValueError):
        SignalParams(background=-1.0)
    with pytest.raises(ValueError):
        SignalParams(seed=-2)
    assert SignalParams(noise='poisson').noise is NoiseKind.POISSON


def test_signal_curve_validation():
    meta = CurveMeta(read_pol=NAMED_STATES['D'], scan=ScanKind.DELAY, write_pol=NAMED_STATES['L'])
    with pytest.raises(ValueError):
        SignalCurve([0.0, 1.0], [1.0], meta)
    with pytest.raises(ValueError):
        SignalCurve([], [], meta)
    with pytest.raises(ValueError):
        SignalCurve([0.0, 0.0], [1.0, 2.0], meta)
    with pytest.raises(ValueError):
        CurveMeta(read_pol=NAMED_STATES['D'], scan=ScanKind.DELAY)
    with pytest.raises(ValueError):
        CurveMeta(read_pol=NAMED_STATES['D'], scan=ScanKind.ANGLE, vary=AngleSweep.PHI)


def test_delay_scan_levels(scan):
    sig = SignalParams(scale=2000.0, background=100.0)
    curve = scan('L', 'R', sig=sig)
    assert curve.values[0] == pytest.approx(2100.0)
    assert curve.meta.label == 'L→R (excited)'
    assert curve.meta.unit == 'ps'
    assert len(curve) == 401


def test_cross_linear_pair_is_pure_exponential(scan, dot):
    curve = scan('V', 'H')
    flattened = curve.values * np.exp(curve.abscissa / dot.tau_x)
    assert np.ptp(flattened) < 1e-9 * flattened[0]
    background = scan('H', 'H', sig=SignalParams(background=25.0))
    assert_allclose(background.values, 25.0, atol=1e-9)


def test_ground_and_excited_paths_agree(scan):
    for write in ('L', 'Dbar', 'R', 'D'):
        ground = scan(write, 'R', path=WritePath.GROUND_RESONANT)
        excited = scan(write, 'R', path=WritePath.EXCITED_RESONANT)
        assert np.max(np.abs(ground.values - excited.values)) <= 1e-12 * np.max(ground.values)


def test_depolarized_excited_path_loses_contrast(dot):
    lossy = replace(dot, relax_depol=0.5)
    delays = np.linspace(0.0, 4.0 * dot.period, 401)
    ground = delay_scan(NAMED_STATES['L'], 'ground', NAMED_STATES['D'], delays, lossy, SignalParams())
    excited = delay_scan(NAMED_STATES['L'], 'excited', NAMED_STATES['D'], delays, lossy, SignalParams())
    assert signal_contrast(excited) < signal_contrast(ground)


def test_scan_grid_errors(dot, clean):
    write, probe = NAMED_STATES['L'], NAMED_STATES['D']
    with pytest.raises(ValueError):
        delay_scan(write, 'ground', probe, [-1.0, 0.0, 1.0], dot, clean)
    with pytest.raises(ValueError):
        delay_scan(write, 'ground', probe, [0.0, 2.0, 1.0], dot, clean)
    with pytest.raises(ValueError):
        delay_scan(write, 'ground', probe, [], dot, clean)
    with pytest.raises(ValueError):
        pl_signal(write, 'ground', probe, -0.5, dot, clean)


def test_noise_is_reproducible_and_keyed(scan):
    sig = SignalParams(noise=NoiseKind.GAUSSIAN, sigma=30.0, seed=11)
    a, b = scan(sig=sig), scan(sig=sig)
    assert np.array_equal(a.values, b.values)
    other = scan(sig=replace(sig, seed=12))
    assert not np.array_equal(a.values, other.values)
    clean = scan()
    assert 10.0 < np.std(a.values - clean.values) < 60.0


def test_pointwise_signal_matches_scan(scan, dot):
    sig = SignalParams(noise=NoiseKind.GAUSSIAN, sigma=30.0, seed=3)
    curve = scan('L', 'D', sig=sig, path=WritePath.GROUND_RESONANT)
    for i in (0, 17, 200, 400):
        value = pl_signal(NAMED_STATES['L'], WritePath.GROUND_RESONANT, NAMED_STATES['D'],
                          curve.abscissa[i], dot, sig, index=i)
        assert value == pytest.approx(curve.values[i], rel=1e-12)


def test_poisson_noise(scan):
    sig = SignalParams(noise=NoiseKind.POISSON, seed=5)
    curve = scan(sig=sig)
    assert np.all(curve.values >= 0.0)
    assert np.array_equal(curve.values, np.round(curve.values))
    assert curve.meta.signal.noise is NoiseKind.POISSON


def test_add_noise_keeps_meta(scan):
    clean = scan()
    sig = SignalParams(noise=NoiseKind.GAUSSIAN, sigma=5.0, seed=1)
    noisy = add_noise(clean, sig)
    assert noisy.meta.signal == sig
    assert noisy.meta.write_pol == clean.meta.write_pol
    assert np.array_equal(noisy.abscissa, clean.abscissa)


def test_sweep_angles():
    assert name_of(jones_from_angles(sweep_angles(AngleSweep.PHI, math.pi / 2))) == 'Dbar'
    assert name_of(jones_from_angles(sweep_angles(AngleSweep.THETA, math.pi / 2))) == 'L'
    assert name_of(jones_from_angles(sweep_angles(AngleSweep.THETA, math.pi))) == 'V'
    assert name_of(jones_from_angles(sweep_angles(AngleSweep.THETA, 1.5 * math.pi))) == 'R'
    assert name_of(jones_from_angles(sweep_angles(AngleSweep.THETA, 2 * math.pi))) == 'H'
    with pytest.raises(ValueError):
        sweep_angles(AngleSweep.THETA, 7.0)


def full_turn():
    return np.linspace(0.0, 2.0 * math.pi, 181)


@pytest.mark.parametrize('vary, flat_probe, full_probe', [
    (AngleSweep.PHI, 'V', 'D'),
    (AngleSweep.THETA, 'D', 'V'),
])
def test_angle_scan_contrast(vary, flat_probe, full_probe, dot, clean):
    flat = angle_scan(vary, full_turn(), named_state(flat_probe), dot.period, 'ground', dot, clean)
    full = angle_scan(vary, full_turn(), named_state(full_probe), dot.period, 'ground', dot, clean)
    assert np.ptp(flat.values) < 1e-9 * clean.scale
    assert signal_contrast(full) == pytest.approx(1.0, abs=1e-6)
    assert flat.meta.write_pol is None
    assert flat.meta.delay == pytest.approx(dot.period)
    assert flat.meta.unit == 'rad'


def test_miscalibrated_lcvr_breaks_flatness(dot, clean):
    flat = angle_scan(AngleSweep.THETA, full_turn(), NAMED_STATES['D'], dot.period, 'ground', dot, clean,
                      lcvr_offset=0.05)
    assert np.ptp(flat.values) > 1e-3 * clean.scale
    assert flat.meta.lcvr_offset == 0.05


def test_phi_scan_maximum_at_orthogonal_of_probe(dot, clean):
    curve = angle_scan(AngleSweep.PHI, full_turn(), NAMED_STATES['D'], dot.period, 'ground', dot, clean)
    assert curve.abscissa[int(np.argmax(curve.values))] == pytest.approx(math.pi / 2)


def test_signal_contrast_without_decay():
    dot = DotParameters(tau_x=math.inf)
    delays = np.linspace(0.0, 4.0 * dot.period, 401)
    curve = delay_scan(NAMED_STATES['L'], 'ground', NAMED_STATES['R'], delays, dot, SignalParams(background=50.0))
    assert signal_contrast(curve) == pytest.approx(1.0, abs=1e-9)
    flat = delay_scan(NAMED_STATES['H'], 'ground', NAMED_STATES['H'], delays, dot, SignalParams(background=50.0))
    assert signal_contrast(flat) == 0.0


def test_orthogonal_probes_are_complementary():
    rng = np.random.default_rng(7)
    for _ in range(500):
        v = rng.normal(size=3)
        v *= rng.uniform(0.0, 1.0) / np.linalg.norm(v)
        state = ExcitonState(tuple(v), rng.uniform(0.0, 1.0))
        probe = jones_from_angles(PoincareAngles(rng.uniform(0.0, math.pi), rng.uniform(0.0, 2 * math.pi)))
        total = projection_probability(state, probe) + projection_probability(state, orthogonal(probe))
        assert total == pytest.approx(state.population, abs=1e-12)


@pytest.mark.parametrize('write, read', [('L', 'D'), ('L', 'R'), ('D', 'Dbar'), ('R', 'D')])
def test_period_maxima_follow_lifetime(scan, dot, write, read):
    curve = scan(write, read)
    per_period = curve.values[:400].reshape(4, 100).max(axis=1)
    assert_allclose(per_period[1:] / per_period[:-1], math.exp(-dot.period / dot.tau_x), rtol=1e-9)


def test_poisson_relative_spread():
    meta = CurveMeta(read_pol=NAMED_STATES['V'], scan=ScanKind.DELAY, write_pol=NAMED_STATES['H'])
    flat = SignalCurve(np.arange(4000.0), np.full(4000, 10000.0), meta)
    noisy = add_noise(flat, SignalParams(noise=NoiseKind.POISSON, seed=11))
    assert np.mean(noisy.values) == pytest.approx(10000.0, abs=10.0)
    assert 0.009 < np.std(noisy.values) / np.mean(noisy.values) < 0.011
