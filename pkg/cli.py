"""Command-line front end.

    python cli.py scan-delay --write L --read D --out_dir results
    python cli.py scan-angle --vary theta --read V
    python cli.py preset fig3a_LD
    python cli.py fit results/fig3a_LD.csv
    python cli.py estimate results/d.csv results/v.csv
    python cli.py solve-lcvr R
    python cli.py plot results/*.csv --out curves.svg
    python cli.py sweep --cfg configs/runner.yaml

Exit status: 0 on success, 2 on invalid input, 1 on any other failure.
"""
import argparse
import logging
import os
import sys
from dataclasses import replace
from itertools import product

import tqdm

from config import KEYS, PRESETS, PRESET_DIR, merge_config
from dataset.curve import save_curve
from dataset.datahandler import get_curves
from models.dynamics import check_pulse_validity
from models.polarization import format_polarization, parse_polarization, solve_lcvr_pair
from models.readout import ScanKind, angle_scan, delay_scan, signal_contrast
from models.tomography import estimate_report, estimate_state, fit_delay_curve, fit_report
from util.util import atomic_write
from util.visualizer import Visualizer, emit_plot

logger = logging.getLogger('cli')

FLOAT_KEYS = ('delta_gs', 'delta_es', 'tau_x', 't2', 't1_spin', 'relax_depol', 'pulse_duration', 'pulse_width',
              'scale', 'background', 'sigma', 'delay_start', 'delay_stop', 'angle_start', 'angle_stop',
              'delay', 'lcvr_offset', 'axis_offset')
INT_KEYS = ('delay_points', 'angle_points')
TEXT_KEYS = ('write', 'read', 'path', 'noise', 'vary', 'out_dir', 'name')


def setup_logging(verbose=False, quiet=False):
    level = logging.DEBUG if verbose else (logging.WARNING if quiet else logging.INFO)
    logging.basicConfig(level=level, format='%(asctime)s - %(levelname)s - %(message)s',
                        stream=sys.stderr, force=True)
    logging.captureWarnings(True)


# --------------------------------------------------------------------------- simulation

def simulate(config):
    """Curves described by an ExperimentConfig; several curves get consecutive noise seeds."""
    exp, dot, sig = config.experiment, config.dot, config.signal
    check_pulse_validity(dot)
    curves = []
    if exp.scan is ScanKind.DELAY:
        pairs = list(product(exp.write_labels, exp.read_labels))
        delays = exp.delay_grid(dot)
        for k, (write, read) in enumerate(tqdm.tqdm(pairs, desc='delay scans', disable=None, leave=False)):
            curves.append(delay_scan(parse_polarization(write), exp.path, parse_polarization(read), delays, dot,
                                     replace(sig, seed=sig.seed + k), exp.lcvr_offset, exp.axis_offset))
    else:
        angles = exp.angle_grid()
        for k, read in enumerate(tqdm.tqdm(exp.read_labels, desc='angle scans', disable=None, leave=False)):
            curves.append(angle_scan(exp.vary, angles, parse_polarization(read), exp.fixed_delay(dot), exp.path,
                                     dot, replace(sig, seed=sig.seed + k), exp.lcvr_offset, exp.axis_offset))
    return curves


def curve_filename(config, curve, several):
    if not several:
        return f'{config.name}.csv'
    meta = curve.meta
    parts = [config.name]
    if meta.write_pol is not None:
        parts.append(format_polarization(meta.write_pol))
    parts.append(format_polarization(meta.read_pol))
    return '_'.join(parts).replace(':', '_') + '.csv'


def run_experiment(config):
    """Simulate, write one CSV per curve plus an SVG overlay; returns the written paths."""
    out_dir = config.output.out_dir
    visualizer = Visualizer(out_dir, config.name, config.output.tensorboard)
    curves = simulate(config)
    written = []
    for i, curve in enumerate(curves):
        path = os.path.join(out_dir, curve_filename(config, curve, len(curves) > 1))
        save_curve(curve, path)
        written.append(path)
        results = {'curve': curve.meta.label, 'points': len(curve), 'contrast': signal_contrast(curve)}
        visualizer.print_current_results(config.name, i, results)
        visualizer.plot_current_results(config.name, {'contrast': results['contrast']}, i)
    written.append(emit_plot(curves, os.path.join(out_dir, f'{config.name}.svg')))
    visualizer.close()
    logger.info('wrote %s', ', '.join(written))
    return written


def _read(path):
    with open(path, 'r', encoding='utf-8') as f:
        return f.read()


def run_preset(name, overrides=None, out_dir=None, text=''):
    """Run a preset; `text` (a config document) sits on top of the preset file, flags on top of both."""
    if name not in PRESETS:
        raise ValueError(f'unknown preset {name!r}, expected one of {list(PRESETS)}')
    overrides = dict(overrides or {})
    if out_dir is not None:
        overrides['out_dir'] = out_dir
    config = merge_config(text, overrides, base=_read(os.path.join(PRESET_DIR, f'{name}.yaml')))
    return run_experiment(config)


# --------------------------------------------------------------------------- commands

def _overrides(args):
    return {k: getattr(args, k) for k in KEYS if getattr(args, k, None) is not None}


def _config(args, scan=None):
    overrides = _overrides(args)
    if scan is not None:
        overrides['scan'] = scan
    return merge_config(_read(args.config) if args.config else '', overrides)


def cmd_scan_delay(args):
    run_experiment(_config(args, 'delay'))


def cmd_scan_angle(args):
    run_experiment(_config(args, 'angle'))


def cmd_preset(args):
    run_preset(args.preset, _overrides(args), text=_read(args.config) if args.config else '')


def _emit_report(text, out):
    if out:
        atomic_write(out, text)
    sys.stdout.write(text)


def cmd_fit(args):
    curves = get_curves(args.curves)
    reports = [fit_report(fit_delay_curve(c), c) for c in curves]
    _emit_report('\n'.join(reports), args.out)


def cmd_estimate(args):
    estimate = estimate_state(get_curves(args.curves), with_fits=args.with_fits)
    _emit_report(estimate_report(estimate), args.out)


def cmd_solve_lcvr(args):
    r1, r2 = solve_lcvr_pair(parse_polarization(args.polarization))
    sys.stdout.write(f'retardance1 = {r1!r}\nretardance2 = {r2!r}\n')


def cmd_plot(args):
    curves = get_curves(args.curves)
    out = args.out or os.path.splitext(args.curves[0])[0] + '.svg'
    emit_plot(curves, out)
    logger.info('wrote %s', out)


def cmd_sweep(args):
    from runner import run_sweep
    run_sweep(args.cfg, seed=args.seed, out_dir=args.out_dir)


def add_config_flags(parser):
    for key in FLOAT_KEYS:
        parser.add_argument(f'--{key}', type=float, default=None, help=f'config key {key}')
    for key in INT_KEYS:
        parser.add_argument(f'--{key}', type=int, default=None, help=f'config key {key}')
    for key in TEXT_KEYS:
        parser.add_argument(f'--{key}', type=str, default=None, help=f'config key {key}')
    parser.add_argument('--tensorboard', action='store_const', const=True, default=None,
                        help='log scalars to tensorboard')


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=str, default='', help='config file (YAML or key = value lines); flags override its values')
    common.add_argument('--seed', type=int, default=None, help='noise seed')
    common.add_argument('--verbose', action='store_true', help='debug logging')
    common.add_argument('--quiet', action='store_true', help='warnings and errors only')

    parser = argparse.ArgumentParser(description='Exciton spin write/read simulator and tomography toolkit')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('scan-delay', parents=[common], help='PL counts against write/read delay')
    add_config_flags(p)
    p.set_defaults(func=cmd_scan_delay)

    p = sub.add_parser('scan-angle', parents=[common], help='PL counts against the write polarization angle')
    add_config_flags(p)
    p.set_defaults(func=cmd_scan_angle)

    p = sub.add_parser('preset', parents=[common], help='run one of the figure presets')
    p.add_argument('preset', choices=PRESETS)
    add_config_flags(p)
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser('fit', parents=[common], help='fit the damped oscillation model to delay scans')
    p.add_argument('curves', nargs='+')
    p.add_argument('--out', type=str, default='', help='also write the report to this file')
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser('estimate', parents=[common], help='recover the written state from several probes')
    p.add_argument('curves', nargs='+')
    p.add_argument('--with_fits', action='store_true', help='append per-curve fits to the report')
    p.add_argument('--out', type=str, default='', help='also write the report to this file')
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser('solve-lcvr', parents=[common], help='LCVR retardances producing a polarization')
    p.add_argument('polarization', help='H, V, D, Dbar, R, L or theta:phi')
    p.set_defaults(func=cmd_solve_lcvr)

    p = sub.add_parser('plot', parents=[common], help='overlay curve files in an SVG plot')
    p.add_argument('curves', nargs='+')
    p.add_argument('--out', type=str, default='', help='SVG path (default: next to the first curve)')
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser('sweep', parents=[common], help='Monte-Carlo sweep of the state estimator')
    p.add_argument('--cfg', type=str, default='configs/runner.yaml', help='sweep definition')
    p.add_argument('--out_dir', type=str, default=None, help='overrides out_dir of the sweep definition')
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose, args.quiet)
    try:
        args.func(args)
    except ValueError as e:
        logger.error('%s', e)
        return 2
    except Exception as e:
        logger.error('%s: %s', type(e).__name__, e)
        logger.debug('traceback', exc_info=True)
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
