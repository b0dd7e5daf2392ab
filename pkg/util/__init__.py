"""This package includes a miscellaneous collection of useful helper functions."""
import math

import numpy as np

TWO_PI = 2.0 * math.pi


def make_class_from_dict(opt):
    if any([isinstance(k, int) for k in opt.keys()]):
        return opt
    else:
        class dict_class():
            def __init__(self):
                for k, v in opt.items():
                    if isinstance(v, dict):
                        setattr(self, k, make_class_from_dict(v))
                    else:
                        setattr(self, k, v)
        return dict_class()


def wrap_angle(angle):
    """Wrap an angle into [0, 2pi)."""
    out = math.fmod(float(angle), TWO_PI)
    if out < 0.0:
        out += TWO_PI
    if out >= TWO_PI:
        out = 0.0
    return out


def parabolic_vertex(x, y):
    """Abscissa and ordinate of the vertex of the parabola through three points."""
    x0, x1, x2 = (float(v) for v in x)
    y0, y1, y2 = (float(v) for v in y)
    # local coordinates around the middle sample
    u0, u2 = x0 - x1, x2 - x1
    g0, g2 = (y0 - y1) / u0, (y2 - y1) / u2
    a = (g0 - g2) / (u0 - u2)
    if a == 0.0:
        return x1, y1
    b = g0 - a * u0
    return x1 - b / (2.0 * a), y1 - b * b / (4.0 * a)
