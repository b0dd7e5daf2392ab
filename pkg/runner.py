"""Monte-Carlo sweep of the state estimator.

Every combination of the lists in the sweep definition (theta, phi,
noise_fraction) is written, read out with each probe, noised with n_seeds
different seeds and estimated. The angular errors are summarized per
combination in the run log and in <out_dir>/sweep.csv.
"""
import argparse
import logging
import os
from itertools import product

import numpy as np
import tqdm
import yaml

from models.dynamics import DotParameters, WritePath
from models.polarization import PoincareAngles, jones_from_angles, parse_polarization
from models.readout import NoiseKind, SignalParams, delay_scan
from models.tomography import estimate_state
from util import make_class_from_dict
from util.metrics.state_error import angular_error, summarize_errors
from util.util import atomic_write
from util.visualizer import Visualizer

logger = logging.getLogger(__name__)

SWEEP_KEYS = ('theta', 'phi', 'noise_fraction')
DEFAULTS = {'n_seeds': 20, 'probes': ['D', 'V'], 'path': 'ground', 'delay_points': 401,
            'out_dir': 'results/sweep', 'tensorboard': False, 'scale': 10000.0}


def load_sweep(cfg_path):
    with open(cfg_path, 'r') as f:
        runner_opt = yaml.safe_load(f) or {}
    for k in SWEEP_KEYS:
        if k not in runner_opt:
            raise ValueError(f'{cfg_path}: missing sweep list {k!r}')
        if not isinstance(runner_opt[k], list) or not runner_opt[k]:
            raise ValueError(f'{cfg_path}: {k!r} must be a non-empty list')
    unknown = set(runner_opt) - set(SWEEP_KEYS) - set(DEFAULTS)
    if unknown:
        raise ValueError(f'{cfg_path}: unknown keys {sorted(unknown)}')
    return {**DEFAULTS, **runner_opt}


def estimate_once(angles, noise_fraction, seed, opt, dot):
    """Angular error of one noisy estimate; sigma is noise_fraction of the mean level scale/2."""
    write = jones_from_angles(angles)
    delays = np.linspace(0.0, 4.0 * dot.period, opt.delay_points)
    noise = NoiseKind.GAUSSIAN if noise_fraction > 0.0 else NoiseKind.NONE
    sigma = noise_fraction * opt.scale / 2.0
    curves = [delay_scan(write, WritePath(opt.path), parse_polarization(probe), delays, dot,
                         SignalParams(scale=opt.scale, noise=noise, sigma=sigma, seed=seed * 16 + k))
              for k, probe in enumerate(opt.probes)]
    estimate = estimate_state(curves)
    return angular_error(estimate.angles, angles)


def sweep(runner_opt, dot=None, seed=0):
    """Run the sweep described by `runner_opt` (a dict as read from the sweep YAML).

    Returns one row per (theta, phi, noise_fraction) with the error summary.
    """
    opt = make_class_from_dict(runner_opt)
    dot = DotParameters() if dot is None else dot
    visualizer = Visualizer(opt.out_dir, 'sweep', opt.tensorboard)
    combos = list(product(*[runner_opt[k] for k in SWEEP_KEYS]))
    rows = []
    tq = tqdm.tqdm(total=len(combos), desc='sweep', disable=None)
    for step, (theta, phi, noise_fraction) in enumerate(combos):
        angles = PoincareAngles(float(theta), float(phi))
        errors = [estimate_once(angles, float(noise_fraction), seed + s, opt, dot) for s in range(opt.n_seeds)]
        summary = summarize_errors(errors)
        row = {'theta': angles.theta, 'phi': angles.phi, 'noise_fraction': float(noise_fraction), **summary}
        rows.append(row)
        visualizer.print_current_results('sweep', step, row, tq)
        visualizer.plot_current_results('sweep', summary, step)
        tq.update(1)
    tq.close()
    visualizer.close()

    header = list(rows[0].keys())
    lines = [','.join(header)] + [','.join(repr(float(r[k])) for k in header) for r in rows]
    atomic_write(os.path.join(opt.out_dir, 'sweep.csv'), '\n'.join(lines) + '\n')
    worst = max(r['p90'] for r in rows)
    logger.info('sweep of %d combinations done, worst 90th-percentile error %.3g rad', len(rows), worst)
    return rows


def run_sweep(cfg_path, seed=None, out_dir=None):
    runner_opt = load_sweep(cfg_path)
    if out_dir is not None:
        runner_opt['out_dir'] = out_dir
    return sweep(runner_opt, seed=0 if seed is None else seed)


if __name__ == '__main__':
    parser = argparse.ArgumentParser()
    parser.add_argument('--cfg', type=str, default='configs/runner.yaml', help='Path of the sweep definition')
    parser.add_argument('--seed', type=int, default=0, help='first noise seed')
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
    run_sweep(args.cfg, seed=args.seed)
