import datetime
import io
import logging
import os
import time

import matplotlib
matplotlib.use('Agg')
from matplotlib import pyplot as plt

from models.readout import AngleSweep, ScanKind
from util.util import atomic_write, mkdir

logger = logging.getLogger(__name__)

PLOT_SIZE = (6.4, 4.0)
# fixed salt and no date so identical curves give identical SVG bytes
SVG_RC = {'svg.hashsalt': 'signal-curve', 'svg.fonttype': 'none', 'path.simplify': False}


class Visualizer():
    """This class prints and saves the results of an experiment.

    Every record goes to <out_dir>/run_log.txt; with tensorboard enabled (and torch
    installed) scalars are also written to a SummaryWriter under <out_dir>/TB/<timestamp>.
    """

    def __init__(self, out_dir, name='run', tensorboard=False):
        """Initialize the Visualizer class

        Parameters:
            out_dir (str)      -- directory of the run log and the tensorboard events
            name (str)         -- experiment name written in the log header
            tensorboard (bool) -- also log scalars to tensorboard
        """
        self.exp_dir = out_dir
        mkdir(out_dir)
        self.log_name = os.path.join(out_dir, 'run_log.txt')
        with open(self.log_name, 'a', encoding='utf-8') as log_file:
            now = time.strftime('%c')
            log_file.write('================ %s (%s) ================\n' % (name, now))
        self.writer = None
        if tensorboard:
            try:
                from torch.utils.tensorboard import SummaryWriter
            except ImportError:
                logger.warning('tensorboard logging requested but torch.utils.tensorboard is unavailable')
            else:
                self.tb_dir = os.path.join(out_dir, 'TB', datetime.datetime.now().strftime('%Y-%m-%d_%H-%M-%S'))
                os.makedirs(self.tb_dir, exist_ok=True)
                self.writer = SummaryWriter(self.tb_dir)

    def plot_current_results(self, phase, results, step):
        """Send scalar results to tensorboard (no-op without a writer).

        Parameters:
            phase (str)    -- tag prefix
            results (dict) -- (name, float) pairs
            step (int)     -- global step
        """
        if self.writer is None:
            return
        for tag, value in results.items():
            self.writer.add_scalar(phase + '/' + tag, value, step)

    def print_current_results(self, phase, step, results, tq=None):
        """print results on console; also save them to the disk"""
        message = '(%s: %d) ' % (phase, step)
        for k, v in results.items():
            message += '%s: %.6g ' % (k, v) if isinstance(v, float) else '%s: %s ' % (k, v)
        if tq is not None:
            tq.write(message)
        else:
            logger.info(message)
        with open(self.log_name, 'a', encoding='utf-8') as log_file:
            log_file.write('%s\n' % message)

    def close(self):
        if self.writer is not None:
            self.writer.close()
            self.writer = None


def axis_label(meta):
    if meta.scan is ScanKind.DELAY:
        return 'delay Δτ (ps)'
    return ('θ' if meta.vary is AngleSweep.THETA else 'φ') + f' ({meta.unit})'


def emit_plot(curves, path):
    """Overlay curves of one scan kind in an SVG file; identical input gives identical bytes."""
    curves = list(curves)
    if not curves:
        raise ValueError('nothing to plot')
    kinds = {(c.meta.scan, c.meta.vary) for c in curves}
    if len(kinds) > 1:
        raise ValueError('cannot overlay delay scans and angle scans (or different angle sweeps) in one plot')
    with plt.rc_context(SVG_RC):
        fig, ax = plt.subplots(figsize=PLOT_SIZE)
        for curve in curves:
            ax.plot(curve.abscissa, curve.values, linewidth=1.0, label=curve.meta.label)
        ax.set_xlabel(axis_label(curves[0].meta))
        ax.set_ylabel('biexciton PL (counts)')
        ax.legend(loc='best', fontsize='small')
        fig.tight_layout()
        buf = io.BytesIO()
        fig.savefig(buf, format='svg', metadata={'Date': None})
        plt.close(fig)
    atomic_write(path, buf.getvalue())
    logger.debug('plotted %d curves to %s', len(curves), path)
    return path
