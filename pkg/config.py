"""Experiment configuration: YAML documents, validation, presets.

A document is either flat (`scan: delay`, `write: L`, ...) or grouped in the
sections `dot`, `signal`, `experiment` and `output`. Key names are unique
across sections, so flat keys are routed to their section. Every validation
error names the key and, when it came from a file, the line.

Plain `key = value` lines and `[section]` headers are accepted as well and are
rewritten to YAML line for line before parsing, e.g.

    # minimal delay scan
    scan = delay
    write = L
    read = D
"""
import logging
import math
import os
import re
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import Optional

import numpy as np
import yaml

from models import find_option
from models.dynamics import DotParameters, WritePath
from models.polarization import parse_polarization
from models.readout import AngleSweep, ScanKind, SignalParams

logger = logging.getLogger(__name__)

PRESET_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'configs', 'presets')
PRESETS = ('fig3a_LD', 'fig3a_LL', 'fig3a_LDbar', 'fig3a_LR', 'fig3a_VH', 'fig3b', 'fig3c',
           'fig4a_phi_D', 'fig4a_phi_V', 'fig4b_theta_V', 'fig4b_theta_D')
SECTIONS = ('dot', 'signal', 'experiment', 'output')


class ConfigError(ValueError):
    def __init__(self, key, message, line=None):
        self.key, self.line = key, line
        prefix = f'line {line}: ' if line is not None else ''
        super().__init__(f'{prefix}{key}: {message}')


@dataclass(frozen=True)
class ExperimentSpec:
    """What to scan. Polarizations are kept as their labels (names or 'theta:phi')."""
    scan: ScanKind
    read: Optional[str] = None
    reads: tuple = ()
    write: Optional[str] = None
    writes: tuple = ()
    path: WritePath = WritePath.GROUND_RESONANT
    delay_start: float = 0.0
    delay_stop: Optional[float] = None
    delay_points: int = 401
    vary: AngleSweep = AngleSweep.PHI
    angle_start: float = 0.0
    angle_stop: Optional[float] = None
    angle_points: int = 181
    delay: Optional[float] = None
    lcvr_offset: float = 0.0
    axis_offset: float = 0.0

    @property
    def write_labels(self):
        return self.writes or ((self.write,) if self.write is not None else ())

    @property
    def read_labels(self):
        return self.reads or (self.read,)

    def delay_grid(self, dot):
        stop = 4.0 * dot.period if self.delay_stop is None else self.delay_stop
        return np.linspace(self.delay_start, stop, self.delay_points)

    def angle_grid(self):
        if self.angle_stop is None:
            stop = 2.0 * math.pi if self.vary is AngleSweep.PHI else math.pi
        else:
            stop = self.angle_stop
        return np.linspace(self.angle_start, stop, self.angle_points)

    def fixed_delay(self, dot):
        return dot.period if self.delay is None else self.delay


@dataclass(frozen=True)
class OutputSpec:
    out_dir: str = 'results'
    name: Optional[str] = None
    tensorboard: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    dot: DotParameters = field(default_factory=DotParameters)
    signal: SignalParams = field(default_factory=SignalParams)
    experiment: ExperimentSpec = None
    output: OutputSpec = field(default_factory=OutputSpec)

    @property
    def name(self):
        if self.output.name:
            return self.output.name
        exp = self.experiment
        reads = '-'.join(exp.read_labels)
        if exp.scan is ScanKind.DELAY:
            stem = f"delay_{'-'.join(exp.write_labels)}_{reads}"
        else:
            stem = f'{exp.vary.value}_{reads}'
        return stem.replace(':', '_')


# --------------------------------------------------------------------------- value checks

def _float(value):
    if isinstance(value, bool):
        raise ValueError(f'expected a number, got {value!r}')
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ValueError(f'expected a number, got {value!r}') from None


def _positive(value):
    v = _float(value)
    if not v > 0.0:
        raise ValueError(f'must be > 0, got {v}')
    return v


def _finite_positive(value):
    v = _positive(value)
    if math.isinf(v):
        raise ValueError('must be finite')
    return v


def _non_negative(value):
    v = _float(value)
    if not (math.isfinite(v) and v >= 0.0):
        raise ValueError(f'must be a finite number >= 0, got {v}')
    return v


def _unit_interval(value):
    v = _float(value)
    if not 0.0 <= v <= 1.0:
        raise ValueError(f'must lie in [0, 1], got {v}')
    return v


def _real(value):
    v = _float(value)
    if not math.isfinite(v):
        raise ValueError(f'must be finite, got {v}')
    return v


def _count(minimum):
    def check(value):
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < minimum:
            raise ValueError(f'must be an integer >= {minimum}, got {value!r}')
        return int(value)
    return check


def _option(kind):
    return lambda value: find_option(kind, value)


def _polarization(value):
    label = str(value).strip()
    parse_polarization(label)
    return label


def _polarizations(value):
    if not isinstance(value, (list, tuple)) or not value:
        raise ValueError(f'expected a non-empty list, got {value!r}')
    return tuple(_polarization(v) for v in value)


def _text(value):
    if not isinstance(value, str) or not value:
        raise ValueError(f'expected a non-empty string, got {value!r}')
    return value


def _flag(value):
    if not isinstance(value, bool):
        raise ValueError(f'expected true or false, got {value!r}')
    return value


# key -> (section, check)
KEYS = {
    'delta_gs': ('dot', _finite_positive),
    'delta_es': ('dot', _finite_positive),
    'tau_x': ('dot', _positive),
    't2': ('dot', _positive),
    't1_spin': ('dot', _positive),
    'relax_depol': ('dot', _unit_interval),
    'pulse_duration': ('dot', _finite_positive),
    'pulse_width': ('dot', _finite_positive),
    'scale': ('signal', _finite_positive),
    'background': ('signal', _non_negative),
    'noise': ('signal', _option('noise')),
    'sigma': ('signal', _non_negative),
    'seed': ('signal', _count(0)),
    'scan': ('experiment', _option('scan')),
    'write': ('experiment', _polarization),
    'writes': ('experiment', _polarizations),
    'read': ('experiment', _polarization),
    'reads': ('experiment', _polarizations),
    'path': ('experiment', _option('path')),
    'delay_start': ('experiment', _non_negative),
    'delay_stop': ('experiment', _non_negative),
    'delay_points': ('experiment', _count(2)),
    'vary': ('experiment', _option('vary')),
    'angle_start': ('experiment', _real),
    'angle_stop': ('experiment', _real),
    'angle_points': ('experiment', _count(2)),
    'delay': ('experiment', _non_negative),
    'lcvr_offset': ('experiment', _real),
    'axis_offset': ('experiment', _real),
    'out_dir': ('output', _text),
    'name': ('output', _text),
    'tensorboard': ('output', _flag),
}


# --------------------------------------------------------------------------- parsing

_ASSIGNMENT = re.compile(r'^(\s*)([A-Za-z_]\w*)\s*=(.*)$')
_HEADER = re.compile(r'^\s*\[\s*([A-Za-z_]\w*)\s*\]\s*(#.*)?$')
_COMMENT = re.compile(r'(^|\s)#.*$')


def _scalar(value):
    value = value.strip()
    # 'theta:phi' labels must stay strings
    if ':' in value and value[:1] not in ('"', "'"):
        return "'" + value.replace("'", "''") + "'"
    return value


def _to_yaml(text):
    """Rewrite `key = value` lines and `[section]` headers as YAML; other lines pass through.

    One output line per input line, so YAML error marks keep their line numbers.
    """
    out, indent = [], ''
    for line in text.splitlines():
        header = _HEADER.match(line)
        if header is not None:
            out.append(f'{header.group(1)}:')
            indent = '  '
            continue
        assignment = _ASSIGNMENT.match(line)
        if assignment is None:
            out.append(line)
            continue
        lead, key, value = assignment.group(1), assignment.group(2), _COMMENT.sub('', assignment.group(3)).strip()
        if key in ('writes', 'reads') and not value.startswith('['):
            value = '[' + ', '.join(_scalar(v) for v in value.split(',')) + ']'
        elif value:
            value = _scalar(value)
        out.append(f'{indent or lead}{key}: {value}')
    return '\n'.join(out) + '\n'


def _collect(text):
    """Flat {key: (value, line)} from a flat or sectioned document."""
    text = _to_yaml(text)
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, 'problem_mark', None)
        raise ConfigError('yaml', str(getattr(e, 'problem', e)),
                          mark.line + 1 if mark is not None else None) from None
    if root is None:
        return {}
    if not isinstance(root, yaml.MappingNode) or not isinstance(data, dict):
        raise ConfigError('yaml', 'expected a mapping of keys to values', root.start_mark.line + 1)

    raw = {}

    def put(key_node, value, section=None):
        key, line = key_node.value, key_node.start_mark.line + 1
        if key not in KEYS:
            raise ConfigError(key, 'unknown key', line)
        if section is not None and KEYS[key][0] != section:
            raise ConfigError(key, f'belongs to section {KEYS[key][0]!r}, not {section!r}', line)
        raw[key] = (value, line)

    for key_node, value_node in root.value:
        key = key_node.value
        if key in SECTIONS:
            block = data.get(key)
            if block is None:
                continue
            if not isinstance(value_node, yaml.MappingNode) or not isinstance(block, dict):
                raise ConfigError(key, 'section must be a mapping', key_node.start_mark.line + 1)
            for inner_key, _ in value_node.value:
                put(inner_key, block[inner_key.value], section=key)
        else:
            put(key_node, data[key])
    return raw


def _build(raw):
    checked = {section: {} for section in SECTIONS}
    lines = {}
    for key, (value, line) in raw.items():
        section, check = KEYS[key]
        try:
            checked[section][key] = check(value)
        except ValueError as e:
            raise ConfigError(key, str(e), line) from None
        lines[key] = line

    exp = checked['experiment']
    if 'scan' not in exp:
        raise ConfigError('scan', 'missing required key (delay or angle)')
    if 'read' not in exp and 'reads' not in exp:
        raise ConfigError('read', 'missing required key')
    if exp['scan'] is ScanKind.DELAY and 'write' not in exp and 'writes' not in exp:
        raise ConfigError('write', 'missing required key for a delay scan')
    if exp.get('delay_stop') is not None and exp['delay_stop'] <= exp.get('delay_start', 0.0):
        raise ConfigError('delay_stop', 'must be greater than delay_start', lines.get('delay_stop'))
    if exp.get('angle_stop') is not None and exp['angle_stop'] <= exp.get('angle_start', 0.0):
        raise ConfigError('angle_stop', 'must be greater than angle_start', lines.get('angle_stop'))
    if exp.get('vary') is AngleSweep.THETA:
        for key in ('angle_start', 'angle_stop'):
            if key in exp and not 0.0 <= exp[key] <= 2.0 * math.pi:
                raise ConfigError(key, 'theta sweeps stay within [0, 2pi]', lines.get(key))

    try:
        dot = DotParameters(**checked['dot'])
        signal = SignalParams(**checked['signal'])
    except ValueError as e:
        raise ConfigError('dot', str(e)) from None
    return ExperimentConfig(dot=dot, signal=signal, experiment=ExperimentSpec(**exp),
                            output=OutputSpec(**checked['output']))


def parse_config(text):
    """Validated ExperimentConfig from YAML text, defaults filled in."""
    return _build(_collect(text))


def _overlay(raw, layer):
    for key, entry in layer.items():
        raw[key] = entry
        # a single write/read replaces a list from a lower layer
        if key in ('write', 'read'):
            raw.pop(key + 's', None)
    return raw


def merge_config(text, overrides, base=None):
    """Like parse_config, with `overrides` (flat key -> value) taking precedence over the text.

    `base`, when given, is a document underneath `text` (a preset under a user file).
    """
    raw = _collect(base) if base else {}
    _overlay(raw, _collect(text) if text else {})
    flags = {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in KEYS:
            raise ConfigError(key, 'unknown key')
        flags[key] = (value, None)
    return _build(_overlay(raw, flags))


def load_config(path, overrides=None):
    with open(path, 'r', encoding='utf-8') as f:
        text = f.read()
    return merge_config(text, overrides or {})


def _plain(value):
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    if isinstance(value, Enum):
        return value.value
    return value


def serialize_config(config):
    """Sectioned YAML text; parse_config(serialize_config(c)) == c."""
    doc = {}
    for section in SECTIONS:
        obj = getattr(config, section)
        doc[section] = {f.name: _plain(getattr(obj, f.name)) for f in fields(obj)
                        if getattr(obj, f.name) not in (None, ())}
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=False)


def load_preset(name):
    if name not in PRESETS:
        raise ValueError(f'unknown preset {name!r}, expected one of {list(PRESETS)}')
    return load_config(os.path.join(PRESET_DIR, f'{name}.yaml'))


def with_seed(config, seed):
    return replace(config, signal=replace(config.signal, seed=seed))
