import logging
import os
from collections import OrderedDict
from glob import glob

from dataset.curve import load_curve
from models.polarization import format_polarization

logger = logging.getLogger(__name__)


def expand_paths(paths):
  """Curve files named by `paths`; directories contribute their *.csv files in sorted order."""
  files = []
  for path in paths:
    if os.path.isdir(path):
      found = sorted(glob(os.path.join(path, '*.csv')))
      if not found:
        logger.warning('no curve files in %s', path)
      files.extend(found)
    else:
      files.append(path)
  return files


def get_curves(paths):
  files = expand_paths(paths)
  if not files:
    raise ValueError('no curve files given')
  curves = [load_curve(f) for f in files]
  logger.info('loaded %d curves', len(curves))
  return curves


def group_by_write(curves):
  """Delay scans grouped by write pulse and path, in order of first appearance."""
  groups = OrderedDict()
  for curve in curves:
    meta = curve.meta
    if meta.write_pol is None:
      continue
    key = f'{format_polarization(meta.write_pol)} ({meta.path.value})'
    groups.setdefault(key, []).append(curve)
  return groups
