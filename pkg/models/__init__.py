"""This package contains the physics of the write/read protocol and the inverse problem.

    -- polarization:  Jones/Stokes calculus, the Poincare chart and the LCVR instrument model.
    -- dynamics:      the write map, precession and decay of the exciton spin, density-matrix oracle.
    -- readout:       biexciton projection, PL signal model, delay and angle scans, noise.
    -- tomography:    damped-oscillation fits, state estimation, maxima and reports.

Enumerations are looked up by their configuration names with `find_option`, e.g.
    >>> from models import find_option
    >>> find_option('path', 'excited')
    <WritePath.EXCITED_RESONANT: 'excited'>
"""
from models.dynamics import DotParameters, ExcitonState, WritePath
from models.polarization import PolarizationState, PoincareAngles, StokesVector, Retarder
from models.readout import AngleSweep, CurveMeta, NoiseKind, ScanKind, SignalCurve, SignalParams

OPTION_ENUMS = {
    'path': WritePath,
    'noise': NoiseKind,
    'scan': ScanKind,
    'vary': AngleSweep,
}


def find_option(kind, name):
    """Return the enum member called `name` among the options of `kind`."""
    enum = OPTION_ENUMS[kind]
    for member in enum:
        if member.value == str(name).strip().lower():
            return member
    raise ValueError(f'unknown {kind} {name!r}, expected one of {[m.value for m in enum]}')
