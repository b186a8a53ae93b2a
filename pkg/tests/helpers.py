"""Shared builders for small test scenes."""

from __future__ import annotations

import numpy as np

from waverom.medium import (ArrayGeometry, ImagingGrid, Reflector,
                            homogeneous_medium)
from waverom.pulse import Pulse


def tiny_scene(with_reflector=True, m=3, tau=0.3, n=4, width=2.5, depth=2.5,
               mesh=16, sensor_gap_nodes=8):
    """Small scene for oracle-sized and fast FD tests."""
    h = 1.0 / mesh
    reflectors = ((Reflector(x0=0.28 * width, z0=0.56 * depth,
                             x1=0.72 * width, z1=0.66 * depth, speed=0.5),)
                  if with_reflector else ())
    medium = homogeneous_medium(width=width, depth=depth, h=h,
                                reflectors=reflectors, strip_depth=0.7)
    spacing = sensor_gap_nodes * h
    array = ArrayGeometry.equispaced(m=m, aperture=spacing * max(m - 1, 1),
                                     center_x=width / 2.0, depth=h / 2.0)
    return medium, array, Pulse(), tau, n


def random_spd_block(rng, n, m, shift=0.5):
    nm = n * m
    A = rng.standard_normal((nm, nm))
    M = A @ A.T + shift * nm * np.eye(nm)
    from waverom.rom import SPD, BlockMatrix

    return BlockMatrix(data=M, n=n, m=m, structure=SPD)


def envelope_peak_time(signal, times):
    """Arrival estimate from the analytic-signal envelope."""
    from scipy.signal import hilbert

    env = np.abs(hilbert(signal))
    return times[int(np.argmax(env))]
