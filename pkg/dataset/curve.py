"""CSV codec of SignalCurve.

A file starts with a block of `# key=value` metadata lines, followed by the
`abscissa,value` header and one row per point. Floats are written with
repr() so a curve survives a save/load cycle bit for bit; lines end in LF.
"""
import logging
import math

import numpy as np

from models.dynamics import DotParameters
from models.polarization import format_polarization, parse_polarization
from models.readout import CurveMeta, ScanKind, SignalCurve, SignalParams
from util.util import atomic_write

logger = logging.getLogger(__name__)

HEADER = 'abscissa,value'
VARIED = 'varied'

# file key -> DotParameters field
DOT_KEYS = {
    'delta_ueV': 'delta_gs',
    'delta_es_ueV': 'delta_es',
    'tau_x_ps': 'tau_x',
    't2_ps': 't2',
    't1_spin_ps': 't1_spin',
    'relax_depol': 'relax_depol',
    'pulse_duration_ps': 'pulse_duration',
    'pulse_width_ueV': 'pulse_width',
}
SIGNAL_KEYS = ('scale', 'background', 'noise', 'sigma', 'seed')
CURVE_KEYS = ('write_pol', 'read_pol', 'scan', 'path', 'vary', 'delay_ps', 'lcvr_offset', 'axis_offset')


class CurveFormatError(ValueError):
    """Malformed curve file."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(message if line is None else f'line {line}: {message}')


def _num(value):
    return repr(float(value))


def format_curve(curve):
    meta = curve.meta
    items = [
        ('write_pol', VARIED if meta.write_pol is None else format_polarization(meta.write_pol)),
        ('read_pol', format_polarization(meta.read_pol)),
        ('scan', meta.scan.value),
        ('path', meta.path.value),
    ]
    if meta.scan is ScanKind.ANGLE:
        items += [('vary', meta.vary.value), ('delay_ps', _num(meta.delay))]
    items += [(key, _num(getattr(meta.dot, name))) for key, name in DOT_KEYS.items()]
    sig = meta.signal
    items += [('scale', _num(sig.scale)), ('background', _num(sig.background)), ('noise', sig.noise.value),
              ('sigma', _num(sig.sigma)), ('seed', str(sig.seed)),
              ('lcvr_offset', _num(meta.lcvr_offset)), ('axis_offset', _num(meta.axis_offset))]
    lines = [f'# {key}={value}' for key, value in items]
    lines.append(HEADER)
    lines += [f'{_num(x)},{_num(y)}' for x, y in zip(curve.abscissa, curve.values)]
    return '\n'.join(lines) + '\n'


def _meta_from_items(items, lines):
    def take(key, convert, default=None):
        if key not in items:
            if default is None:
                raise CurveFormatError(f'missing metadata key {key!r}')
            return default
        try:
            return convert(items[key])
        except ValueError as e:
            raise CurveFormatError(f'{key}: {e}', lines[key]) from None

    dot = DotParameters(**{name: take(key, float, getattr(DotParameters, name))
                           for key, name in DOT_KEYS.items()})
    signal = SignalParams(scale=take('scale', float, 10000.0), background=take('background', float, 0.0),
                          noise=take('noise', str, 'none'), sigma=take('sigma', float, 0.0),
                          seed=take('seed', int, 0))
    scan = take('scan', ScanKind)
    write_label = items.get('write_pol', VARIED)
    write_pol = None if write_label == VARIED else take('write_pol', parse_polarization)
    angle = scan is ScanKind.ANGLE
    return CurveMeta(read_pol=take('read_pol', parse_polarization), scan=scan, write_pol=write_pol,
                     path=take('path', str, 'ground'), dot=dot, signal=signal,
                     vary=take('vary', str) if angle else None,
                     delay=take('delay_ps', float) if angle else None,
                     lcvr_offset=take('lcvr_offset', float, 0.0), axis_offset=take('axis_offset', float, 0.0))


def parse_curve(text):
    items, key_lines = {}, {}
    rows = []
    header_seen = False
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith('#'):
            body = line[1:].strip()
            if header_seen or '=' not in body:
                continue
            key, value = (s.strip() for s in body.split('=', 1))
            if key not in DOT_KEYS and key not in SIGNAL_KEYS and key not in CURVE_KEYS:
                logger.debug('ignoring unknown curve metadata %r on line %d', key, n)
                continue
            items[key], key_lines[key] = value, n
            continue
        if not header_seen:
            if line.replace(' ', '') != HEADER:
                raise CurveFormatError(f'expected header {HEADER!r}, got {line!r}', n)
            header_seen = True
            continue
        fields = line.split(',')
        if len(fields) != 2:
            raise CurveFormatError(f'expected 2 columns, got {len(fields)}', n)
        try:
            x, y = float(fields[0]), float(fields[1])
        except ValueError:
            raise CurveFormatError(f'non-numeric row {line!r}', n) from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise CurveFormatError(f'non-finite row {line!r}', n)
        rows.append((x, y))
    if not header_seen:
        raise CurveFormatError(f'no {HEADER!r} header')
    if not rows:
        raise CurveFormatError('curve has no data rows')
    try:
        meta = _meta_from_items(items, key_lines)
        data = np.array(rows)
        return SignalCurve(data[:, 0], data[:, 1], meta)
    except CurveFormatError:
        raise
    except ValueError as e:
        raise CurveFormatError(str(e)) from None


def save_curve(curve, path):
    atomic_write(path, format_curve(curve))
    logger.debug('wrote %d points to %s', len(curve), path)
    return path


def load_curve(path):
    with open(path, 'r', encoding='utf-8') as f:
        text = f.read()
    try:
        return parse_curve(text)
    except CurveFormatError as e:
        raise CurveFormatError(f'{path}: {e}') from None
