"""Reading the written spin back out of delay-scan curves.

`fit_delay_curve` fits the damped oscillation
    I(t) = B + I0 exp(-t/tau_x) (1 + A C(t) cos(2 pi t / T - phase))
to one curve, where C(t) = exp(-t/t2) is the known coherence factor of the
curve's dot. `estimate_state` recovers (theta, phi) jointly from several
probes sharing one write pulse, `locate_maxima` reports oscillation maxima.
"""
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from models.polarization import PoincareAngles, fidelity, format_polarization, stokes_from_jones
from models.readout import ScanKind
from util import TWO_PI, parabolic_vertex, wrap_angle

logger = logging.getLogger(__name__)

MIN_FIT_POINTS = 8


class NoMaximaError(ValueError):
    """The curve has no local maximum to report."""


class InsufficientProbesError(ValueError):
    """The probe set cannot separate all components of the spin."""


@dataclass(frozen=True)
class FitModel:
    period: float
    tau_x: float
    contrast: float
    phase: float
    level: float
    background: float

    def __post_init__(self):
        if not self.period > 0.0:
            raise ValueError(f'period must be positive, got {self.period}')
        if not self.tau_x > 0.0:
            raise ValueError(f'tau_x must be positive, got {self.tau_x}')
        if not 0.0 <= self.contrast <= 1.0:
            raise ValueError(f'contrast must lie in [0, 1], got {self.contrast}')
        object.__setattr__(self, 'phase', wrap_angle(self.phase))


@dataclass(frozen=True)
class FitResult:
    model: FitModel
    residual_rms: float
    uncertainty: dict
    converged: bool
    iterations: int
    period_identified: bool = True


@dataclass(frozen=True)
class StateEstimate:
    theta: float
    phi: float
    purity: float
    bloch: tuple = (0.0, 0.0, 0.0)
    residual_rms: float = 0.0
    fits: tuple = field(default=(), repr=False)

    @property
    def angles(self):
        return PoincareAngles(self.theta, self.phi)


def model_curve(model, t, t2=math.inf):
    t = np.asarray(t, dtype=float)
    envelope = model.level * np.exp(-t / model.tau_x)
    coherence = np.exp(-t / t2)
    return model.background + envelope * (1.0 + model.contrast * coherence
                                          * np.cos(TWO_PI * t / model.period - model.phase))


# --------------------------------------------------------------------------- fitting

def _evaluate(p, t, coherence):
    B, I0, k, A, f, ph = p
    decay = np.exp(-k * t)
    w = TWO_PI * f * t - ph
    cos_w, sin_w = np.cos(w), np.sin(w)
    osc = 1.0 + A * coherence * cos_w
    y = B + I0 * decay * osc
    jac = np.empty((len(t), 6))
    jac[:, 0] = 1.0
    jac[:, 1] = decay * osc
    jac[:, 2] = -t * I0 * decay * osc
    jac[:, 3] = I0 * decay * coherence * cos_w
    jac[:, 4] = -TWO_PI * t * I0 * decay * A * coherence * sin_w
    jac[:, 5] = I0 * decay * A * coherence * sin_w
    return y, jac


def _levenberg_marquardt(p0, t, y, coherence, max_iter):
    """Damped Gauss-Newton with Marquardt diagonal scaling.

    Returns (params, cost, iterations, converged). A step is kept only when it
    lowers the cost; no acceptable step at any damping counts as stagnation.
    """
    p = np.array(p0, dtype=float)
    model, jac = _evaluate(p, t, coherence)
    r = model - y
    cost = float(r @ r)
    mu = 1e-3
    for it in range(1, max_iter + 1):
        jtj, grad = jac.T @ jac, jac.T @ r
        scale = np.diag(jtj).copy()
        scale = np.maximum(scale, 1e-12 * max(float(np.max(scale)), 1e-300))
        accepted = False
        while mu < 1e20:
            try:
                step = np.linalg.solve(jtj + mu * np.diag(scale), -grad)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(jtj + mu * np.diag(scale), -grad, rcond=None)[0]
            trial = p + step
            if np.all(np.isfinite(trial)) and trial[4] > 0.0:
                trial_model, trial_jac = _evaluate(trial, t, coherence)
                trial_r = trial_model - y
                trial_cost = float(trial_r @ trial_r)
                if np.isfinite(trial_cost) and trial_cost < cost:
                    accepted = True
                    break
            mu *= 4.0
        if not accepted:
            return p, cost, it, True
        rel_step = math.sqrt(float((step * step) @ scale)) / (math.sqrt(float((p * p) @ scale)) + 1e-300)
        drop = cost - trial_cost
        p, r, jac, cost = trial, trial_r, trial_jac, trial_cost
        mu = max(mu / 3.0, 1e-15)
        if rel_step < 1e-10 or drop <= 1e-15 * cost:
            return p, cost, it, True
    return p, cost, max_iter, False


def _uniform(t, y):
    if np.allclose(np.diff(t), t[1] - t[0], rtol=1e-6, atol=0.0):
        return t, y
    grid = np.linspace(t[0], t[-1], len(t))
    return grid, np.interp(grid, t, y)


def _spectral_seed(t, y):
    """Dominant frequency of the linearly detrended curve and its phase."""
    t, y = _uniform(t, y)
    dt = t[1] - t[0]
    resid = y - np.polyval(np.polyfit(t, y, 1), t)
    n_fft = 1 << int(math.ceil(math.log2(16 * len(t))))
    power = np.abs(np.fft.rfft(resid, n_fft))
    freqs = np.fft.rfftfreq(n_fft, dt)
    idx = 1 + int(np.argmax(power[1:-1]))
    f0, _ = parabolic_vertex(freqs[idx - 1:idx + 2], power[idx - 1:idx + 2])
    f0 = f0 if f0 > 0.0 else freqs[idx]
    phase = -np.angle(np.sum(resid * np.exp(-1j * TWO_PI * f0 * t)))
    return float(f0), wrap_angle(phase)


def _decay_seed(t, y, f0):
    """Decay rate from a log-linear fit of the one-period moving average."""
    t_u, y_u = _uniform(t, y)
    window = max(1, min(len(t_u), int(round(1.0 / (f0 * (t_u[1] - t_u[0]))))))
    avg = np.convolve(y_u, np.ones(window) / window, mode='valid')
    t_avg = t_u[window // 2:window // 2 + len(avg)]
    ok = avg > 0.0
    if np.count_nonzero(ok) < 2:
        return 0.0
    slope = np.polyfit(t_avg[ok], np.log(avg[ok]), 1)[0]
    return max(-float(slope), 0.0)


def _linear_seed(t, y, coherence, f0, k0):
    """Background, level, contrast and phase by linear least squares at fixed (f0, k0)."""
    decay = np.exp(-k0 * t)
    w = TWO_PI * f0 * t
    design = np.stack([np.ones_like(t), decay, decay * coherence * np.cos(w),
                       decay * coherence * np.sin(w)], axis=1)
    (B, a, b, c), *_ = np.linalg.lstsq(design, y, rcond=None)
    if abs(a) <= 1e-12 * (float(np.max(np.abs(y))) + 1e-300):
        return B, a, 0.0, 0.0
    # a A cos(w - phase) = b cos w + c sin w holds for either sign of a
    return B, a, math.hypot(b, c) / a, math.atan2(c, b)


def _initial_guesses(t, y, coherence):
    f0, spectral_phase = _spectral_seed(t, y)
    k0 = _decay_seed(t, y, f0)
    B, I0, A, lsq_phase = _linear_seed(t, y, coherence, f0, k0)
    phases = [lsq_phase, spectral_phase, 0.0, math.pi / 2, math.pi, 3 * math.pi / 2]
    return [np.array([B, I0, k0, A, f0, ph]) for ph in phases]


def _finalize(p):
    B, I0, k, A, f, ph = p
    if A < 0.0:
        A, ph = -A, ph + math.pi
    return B, I0, k, A, f, wrap_angle(ph)


def fit_delay_curve(curve, init=None, max_iter=200):
    """Least-squares fit of the damped oscillation model to a delay scan.

    Without `init` the fit starts from a spectral estimate of the period and a
    moving-average estimate of the lifetime and keeps the best of several
    phase seeds. The curve's own t2 enters as a fixed coherence factor.
    """
    meta = curve.meta
    if meta.scan is not ScanKind.DELAY:
        raise ValueError('fit_delay_curve needs a delay scan')
    t, y = curve.abscissa, curve.values
    if len(t) < MIN_FIT_POINTS:
        raise ValueError(f'need at least {MIN_FIT_POINTS} points to fit, got {len(t)}')
    if t[-1] - t[0] < meta.dot.period * (1.0 - 1e-9):
        raise ValueError(f'curve spans {t[-1] - t[0]:.4g} ps, less than one period '
                         f'({meta.dot.period:.4g} ps)')
    coherence = np.exp(-t / meta.dot.t2)

    if init is not None:
        starts = [np.array([init.background, init.level, 1.0 / init.tau_x, init.contrast,
                            1.0 / init.period, init.phase])]
    else:
        starts = _initial_guesses(t, y, coherence)

    best = None
    for start in starts:
        p, cost, iterations, converged = _levenberg_marquardt(start, t, y, coherence, max_iter)
        if best is None or cost < best[1]:
            best = (p, cost, iterations, converged)
    p, cost, iterations, converged = best

    _, jac = _evaluate(p, t, coherence)
    B, I0, k, A, f, ph = _finalize(p)
    n, n_par = len(t), len(p)
    residual_rms = math.sqrt(cost / n)
    dof_var = cost / (n - n_par) if n > n_par else 0.0
    cov = dof_var * np.linalg.pinv(jac.T @ jac)
    sd = np.sqrt(np.clip(np.diag(cov), 0.0, None))

    identified = A * abs(I0) > max(3.0 * residual_rms, 1e-6 * abs(I0))
    uncertainty = {
        'background': float(sd[0]),
        'level': float(sd[1]),
        'tau_x': float(sd[2] / (k * k)) if k > 0.0 else math.inf,
        'contrast': float(sd[3]),
        'period': float(sd[4] / (f * f)),
        'phase': float(sd[5]),
    }
    if not identified:
        uncertainty['period'] = uncertainty['phase'] = math.inf
        warnings.warn(f'no oscillation above the noise in {meta.label}: period and phase unidentified',
                      RuntimeWarning, stacklevel=2)

    model = FitModel(period=1.0 / f, tau_x=1.0 / k if k > 0.0 else math.inf,
                     contrast=min(A, 1.0), phase=ph, level=I0, background=B)
    logger.debug('fit %s: T=%.6g ps phase=%.6g A=%.4g (%d iterations, converged=%s)',
                 meta.label, model.period, model.phase, model.contrast, iterations, converged)
    return FitResult(model=model, residual_rms=residual_rms, uncertainty=uncertainty,
                     converged=converged, iterations=iterations, period_identified=bool(identified))


def phase_ladder(curves):
    """Fitted phases of several delay scans and the successive phase steps in [0, 2pi)."""
    phases = [fit_delay_curve(c).model.phase for c in curves]
    steps = [wrap_angle(b - a) for a, b in zip(phases, phases[1:])]
    return phases, steps


# --------------------------------------------------------------------------- state estimation

def _check_consistent(curves):
    if len(curves) < 2:
        raise InsufficientProbesError(f'need at least two curves, got {len(curves)}')
    first = curves[0].meta
    for curve in curves:
        meta = curve.meta
        if meta.scan is not ScanKind.DELAY:
            raise ValueError('state estimation needs delay scans')
        if fidelity(meta.write_pol, first.write_pol) < 1.0 - 1e-9:
            raise ValueError(f'curves disagree on the write pulse: {format_polarization(first.write_pol)} '
                             f'vs {format_polarization(meta.write_pol)}')
        if meta.dot != first.dot or meta.path is not first.path:
            raise ValueError('curves disagree on the dot parameters or write path')
    probes = np.array([stokes_from_jones(c.meta.read_pol).as_array() for c in curves])
    if not np.any(np.abs(probes[:, 2]) > 1e-9):
        raise InsufficientProbesError('no probe with a component along the H-V axis (e.g. V or H)')
    if not np.any(np.hypot(probes[:, 0], probes[:, 1]) > 1e-9):
        raise InsufficientProbesError('no probe with an equatorial component (e.g. D or R)')
    return probes


def estimate_state(curves, with_fits=False):
    """Recover (theta, phi) of the write pulse from delay scans with different probes.

    The counts of every curve are linear in the unknowns (B, a, a s0) once the
    period, lifetime and coherence times are taken from the curve metadata:
        I(t) = B + a E(t) - E(t) p . M(t) (a s0)
    with E the population decay, M the damped precession and p the probe's
    Stokes vector. One joint least-squares solve gives s0, and with it
    theta, phi and the purity |s0|.

    This is the same estimate as reading theta from the polar-probe level
    against the equatorial contrast and phi from the equatorial phase: a polar
    probe only sees s0[2], an equatorial probe's cosine and sine coefficients
    are a sin(theta) rotated by phi, and theta = atan2(|equatorial|, s0[2])
    cancels the shared level a. Solving jointly also accepts probes off both.
    """
    curves = list(curves)
    probes = _check_consistent(curves)
    dot = curves[0].meta.dot
    fixed_background = math.isinf(dot.tau_x)

    rows, targets = [], []
    for curve, probe in zip(curves, probes):
        t = curve.abscissa
        decay = np.exp(-t / dot.tau_x)
        beta = TWO_PI * t / dot.period
        d2, d1 = np.exp(-t / dot.t2), np.exp(-t / dot.t1_spin)
        cb, sb = np.cos(beta), np.sin(beta)
        # probe . M(t): transverse precession damped by t2, longitudinal by t1
        coef1 = (probe[0] * cb - probe[1] * sb) * d2
        coef2 = (probe[0] * sb + probe[1] * cb) * d2
        coef3 = probe[2] * d1
        block = [decay, -decay * coef1, -decay * coef2, -decay * coef3]
        y = curve.values
        if fixed_background:
            y = y - curve.meta.signal.background
        else:
            block = [np.ones_like(t)] + block
        rows.append(np.stack(block, axis=1))
        targets.append(y)
    design, target = np.concatenate(rows), np.concatenate(targets)

    rank = np.linalg.matrix_rank(design)
    if rank < design.shape[1]:
        raise InsufficientProbesError(f'probe set leaves the spin underdetermined (rank {rank} < {design.shape[1]})')
    x, *_ = np.linalg.lstsq(design, target, rcond=None)
    residual_rms = math.sqrt(float(np.mean((design @ x - target) ** 2)))
    if not fixed_background:
        x = x[1:]
    a, v = x[0], x[1:]
    if a <= 0.0:
        raise ValueError(f'non-positive signal level {a:.3g}: curves carry no exciton signal')
    s0 = v / a

    theta = math.atan2(math.hypot(s0[0], s0[1]), s0[2])
    phi = math.atan2(-s0[0], -s0[1])
    angles = PoincareAngles(theta, phi)
    fits = tuple(fit_delay_curve(c) for c in curves) if with_fits else ()
    logger.debug('estimated theta=%.6g phi=%.6g purity=%.4g from %d curves',
                 angles.theta, angles.phi, float(np.linalg.norm(s0)), len(curves))
    return StateEstimate(theta=angles.theta, phi=angles.phi, purity=min(float(np.linalg.norm(s0)), 1.0),
                         bloch=tuple(float(v) for v in s0), residual_rms=residual_rms, fits=fits)


# --------------------------------------------------------------------------- maxima

def locate_maxima(curve, detrend=True, include_edges=False):
    """Positions of the local maxima, refined by a parabola through each peak sample.

    For delay scans `detrend` divides out the population decay first, using the
    lifetime and background stored with the curve, so the reported positions
    are those of the spin oscillation rather than of the decaying counts.
    With `include_edges` a maximum at the first sample is reported as well.
    """
    x = curve.abscissa
    y = np.asarray(curve.values, dtype=float)
    meta = curve.meta
    if detrend and meta.scan is ScanKind.DELAY:
        y = (y - meta.signal.background) * np.exp(x / meta.dot.tau_x)
    if len(y) < 3:
        raise NoMaximaError(f'curve with {len(y)} points has no interior maximum')
    prominence = 1e-6 * float(np.max(np.abs(y)))
    peaks, _ = find_peaks(y, prominence=prominence if prominence > 0.0 else None)
    positions = []
    if include_edges and y[0] > y[1] and y[0] - float(np.min(y)) > prominence:
        positions.append(float(x[0]))
    for i in peaks:
        pos, _ = parabolic_vertex(x[i - 1:i + 2], y[i - 1:i + 2])
        positions.append(float(pos))
    if not positions:
        raise NoMaximaError(f'no maxima found in {meta.label}')
    return positions


# --------------------------------------------------------------------------- reports

def _fmt(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return f'{value:.10g}'
    return str(value)


def fit_report(result, curve=None):
    m = result.model
    items = []
    if curve is not None:
        items.append(('curve', curve.meta.label))
    items += [
        ('period_ps', m.period), ('period_err_ps', result.uncertainty['period']),
        ('tau_x_ps', m.tau_x), ('tau_x_err_ps', result.uncertainty['tau_x']),
        ('contrast', m.contrast), ('contrast_err', result.uncertainty['contrast']),
        ('phase_rad', m.phase), ('phase_err_rad', result.uncertainty['phase']),
        ('level', m.level), ('background', m.background),
        ('residual_rms', result.residual_rms), ('converged', result.converged),
        ('iterations', result.iterations), ('period_identified', result.period_identified),
    ]
    return '\n'.join(f'{k} = {_fmt(v)}' for k, v in items) + '\n'


def estimate_report(estimate):
    items = [('theta_rad', estimate.theta), ('phi_rad', estimate.phi), ('purity', estimate.purity),
             ('s1', estimate.bloch[0]), ('s2', estimate.bloch[1]), ('s3', estimate.bloch[2]),
             ('residual_rms', estimate.residual_rms)]
    lines = [f'{k} = {_fmt(float(v))}' for k, v in items]
    for i, fit in enumerate(estimate.fits):
        lines += [f'fit{i}.{line}' for line in fit_report(fit).splitlines()]
    return '\n'.join(lines) + '\n'
