"""Media, sensor arrays, imaging grids and preset scenarios.

Units: lengths in multiples of the central wavelength lambda_c, time in
units where the background speed is 1 and omega_c = 2*pi, so lambda_c = 1.

The solver grid is cell centered: node (i, j) sits at ((i+1/2) h, (j+1/2) h)
with x the cross-range coordinate (parallel to the array) and z the range
(depth).  The wall z = 0 next to the sensors is sound hard (the accessible
boundary); the remaining walls are sound soft.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

EDGES = ("top", "bottom", "left", "right")
SOUND_HARD = "sound_hard"
SOUND_SOFT = "sound_soft"


class ConfigurationError(ValueError):
    """Rejected physical or numerical configuration."""


@dataclass(frozen=True)
class Reflector:
    """Thin low-velocity inclusion, a rectangle or a thick segment.

    kind 'rect': x0, z0, x1, z1 are corners.
    kind 'segment': (x0, z0) - (x1, z1) is the axis, `thickness` the width.
    """

    x0: float
    z0: float
    x1: float
    z1: float
    speed: float = 0.5
    thickness: float = 0.25
    kind: str = "rect"

    def rasterize(self, X, Z, c):
        if self.kind == "rect":
            mask = ((X >= min(self.x0, self.x1)) & (X <= max(self.x0, self.x1))
                    & (Z >= min(self.z0, self.z1)) & (Z <= max(self.z0, self.z1)))
        elif self.kind == "segment":
            px, pz = X - self.x0, Z - self.z0
            dx, dz = self.x1 - self.x0, self.z1 - self.z0
            L2 = dx * dx + dz * dz
            t = np.clip((px * dx + pz * dz) / L2, 0.0, 1.0)
            dist2 = (px - t * dx) ** 2 + (pz - t * dz) ** 2
            mask = dist2 <= (self.thickness / 2.0) ** 2
        else:
            raise ConfigurationError(f"unknown reflector kind {self.kind!r}")
        c[mask] = self.speed
        return c

    def to_dict(self):
        return {"kind": self.kind, "x0": self.x0, "z0": self.z0,
                "x1": self.x1, "z1": self.z1, "speed": self.speed,
                "thickness": self.thickness}

    @staticmethod
    def from_dict(d):
        return Reflector(**d)


@dataclass(frozen=True)
class Medium:
    """Wave speed field on a cell-centered rectangular grid."""

    nx: int
    nz: int
    h: float
    c: np.ndarray
    c_ref: np.ndarray
    boundary: dict = field(default_factory=lambda: {
        "top": SOUND_HARD, "bottom": SOUND_SOFT,
        "left": SOUND_SOFT, "right": SOUND_SOFT})
    strip_depth: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        c_ref = np.asarray(self.c_ref, dtype=float)
        if c.shape != (self.nx, self.nz) or c_ref.shape != (self.nx, self.nz):
            raise ConfigurationError("speed fields must have shape (nx, nz)")
        if not (np.all(c > 0) and np.all(c_ref > 0)):
            raise ConfigurationError("wave speeds must be positive")
        if set(self.boundary) != set(EDGES):
            raise ConfigurationError("boundary must tag all four edges")
        hard = [e for e in EDGES if self.boundary[e] == SOUND_HARD]
        if len(hard) != 1:
            raise ConfigurationError("exactly one edge must be sound hard")
        strip = self.z < self.strip_depth
        if not np.allclose(c[:, strip], c_ref[:, strip]):
            raise ConfigurationError(
                "speed must equal the reference speed in the sensor strip")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "c_ref", c_ref)

    @property
    def x(self):
        return (np.arange(self.nx) + 0.5) * self.h

    @property
    def z(self):
        return (np.arange(self.nz) + 0.5) * self.h

    @property
    def accessible_edge(self):
        return next(e for e in EDGES if self.boundary[e] == SOUND_HARD)

    @property
    def width(self):
        return self.nx * self.h

    @property
    def depth(self):
        return self.nz * self.h

    def reference(self) -> "Medium":
        """The same domain with c = c_ref everywhere."""
        return replace(self, c=self.c_ref.copy())

    def is_reference(self) -> bool:
        return np.array_equal(self.c, self.c_ref)

    def nearest_node(self, x, z):
        ix = int(round(x / self.h - 0.5))
        iz = int(round(z / self.h - 0.5))
        if not (0 <= ix < self.nx and 0 <= iz < self.nz):
            raise ConfigurationError(f"point ({x}, {z}) is outside the domain")
        return ix, iz


def homogeneous_medium(width, depth, h, c0=1.0, reflectors=(), strip_depth=1.0):
    """Uniform background with optional reflectors rasterized on top."""
    nx, nz = int(round(width / h)), int(round(depth / h))
    X, Z = np.meshgrid((np.arange(nx) + 0.5) * h, (np.arange(nz) + 0.5) * h,
                       indexing="ij")
    c_ref = np.full((nx, nz), float(c0))
    c = c_ref.copy()
    for r in reflectors:
        c = r.rasterize(X, Z, c)
    return Medium(nx=nx, nz=nz, h=h, c=c, c_ref=c_ref, strip_depth=strip_depth)


@dataclass(frozen=True)
class ArrayGeometry:
    """Equidistant active array on the accessible boundary."""

    m: int
    positions: np.ndarray  # (m, 2) ideal [x, z]
    aperture: float

    def __post_init__(self):
        p = np.asarray(self.positions, dtype=float)
        if p.shape != (self.m, 2):
            raise ConfigurationError("positions must have shape (m, 2)")
        if self.m > 1:
            gaps = np.diff(p[:, 0])
            if not np.allclose(gaps, gaps[0]):
                raise ConfigurationError("sensors must be equidistant")
        object.__setattr__(self, "positions", p)

    @staticmethod
    def equispaced(m, aperture, center_x, depth=0.0):
        if m < 1:
            raise ConfigurationError("need at least one sensor")
        xs = center_x + (np.arange(m) - (m - 1) / 2.0) * (aperture / max(m - 1, 1))
        return ArrayGeometry(m=m, positions=np.column_stack(
            [xs, np.full(m, depth)]), aperture=aperture)

    def node_indices(self, medium: Medium):
        """Nearest-node (ix, iz) for every sensor, validated in the strip."""
        ix = np.round(self.positions[:, 0] / medium.h - 0.5).astype(int)
        iz = np.maximum(np.round(self.positions[:, 1] / medium.h - 0.5), 0).astype(int)
        if np.any(ix < 0) or np.any(ix >= medium.nx) or np.any(iz >= medium.nz):
            raise ConfigurationError("sensor positions fall outside the grid")
        if len(np.unique(ix * medium.nz + iz)) != self.m:
            raise ConfigurationError("sensors collapse onto the same node")
        if np.any(medium.z[iz] >= medium.strip_depth):
            raise ConfigurationError("sensors must sit in the reference strip")
        return ix, iz

    def subarray(self, count):
        """Centered sub-array with the same sensor spacing (smaller aperture)."""
        if not (1 <= count <= self.m):
            raise ConfigurationError("sub-array size out of range")
        lo = (self.m - count) // 2
        idx = np.arange(lo, lo + count)
        pos = self.positions[idx]
        return ArrayGeometry(m=count, positions=pos,
                             aperture=pos[-1, 0] - pos[0, 0]), idx


@dataclass(frozen=True)
class ImagingGrid:
    """Regular imaging lattice aligned with solver nodes."""

    x0: float
    z0: float
    dx: float
    dz: float
    nx: int
    nz: int

    @property
    def shape(self):
        return (self.nx, self.nz)

    @property
    def size(self):
        return self.nx * self.nz

    @property
    def x(self):
        return self.x0 + np.arange(self.nx) * self.dx

    @property
    def z(self):
        return self.z0 + np.arange(self.nz) * self.dz

    @staticmethod
    def full(medium: Medium):
        """The whole solver lattice as an imaging grid."""
        return ImagingGrid(x0=0.5 * medium.h, z0=0.5 * medium.h,
                           dx=medium.h, dz=medium.h,
                           nx=medium.nx, nz=medium.nz)

    @staticmethod
    def aligned(medium: Medium, x_range, z_range, stride=1):
        """Sub-lattice of solver nodes covering the requested window."""
        h = medium.h
        i0 = max(int(np.ceil(x_range[0] / h - 0.5)), 0)
        i1 = min(int(np.floor(x_range[1] / h - 0.5)), medium.nx - 1)
        j0 = max(int(np.ceil(z_range[0] / h - 0.5)), 0)
        j1 = min(int(np.floor(z_range[1] / h - 0.5)), medium.nz - 1)
        if i1 < i0 or j1 < j0:
            raise ConfigurationError("imaging window is outside the domain")
        sx = stride if np.isscalar(stride) else stride[0]
        sz = stride if np.isscalar(stride) else stride[1]
        nx = (i1 - i0) // sx + 1
        nz = (j1 - j0) // sz + 1
        return ImagingGrid(x0=(i0 + 0.5) * h, z0=(j0 + 0.5) * h,
                           dx=sx * h, dz=sz * h, nx=nx, nz=nz)

    def solver_indices(self, medium: Medium):
        """Flat solver-node index of every imaging node (row-major x, z)."""
        ix = np.round(self.x / medium.h - 0.5).astype(int)
        iz = np.round(self.z / medium.h - 0.5).astype(int)
        if (np.any(np.abs((ix + 0.5) * medium.h - self.x) > 1e-9)
                or np.any(np.abs((iz + 0.5) * medium.h - self.z) > 1e-9)):
            raise ConfigurationError("imaging grid is not aligned with solver nodes")
        return (ix[:, None] * medium.nz + iz[None, :]).ravel()

    def flat_index(self, ix, iz):
        return ix * self.nz + iz

    def node_of(self, x, z):
        ix = int(round((x - self.x0) / self.dx))
        iz = int(round((z - self.z0) / self.dz))
        if not (0 <= ix < self.nx and 0 <= iz < self.nz):
            raise ConfigurationError(f"point ({x}, {z}) is outside the imaging grid")
        return ix, iz

    def interp_weights(self, x, z):
        """Bilinear weights over the 4 surrounding imaging nodes.

        Exact (single node, weight 1) when (x, z) is a lattice point.
        """
        fx = (x - self.x0) / self.dx
        fz = (z - self.z0) / self.dz
        if not (-1e-9 <= fx <= self.nx - 1 + 1e-9
                and -1e-9 <= fz <= self.nz - 1 + 1e-9):
            raise ConfigurationError(f"point ({x}, {z}) is outside the imaging grid")
        i = min(int(np.floor(fx + 1e-12)), self.nx - 2) if self.nx > 1 else 0
        j = min(int(np.floor(fz + 1e-12)), self.nz - 2) if self.nz > 1 else 0
        ax, az = fx - i, fz - j
        if abs(ax - round(ax)) < 1e-12:
            ax = float(round(ax))
        if abs(az - round(az)) < 1e-12:
            az = float(round(az))
        nodes, weights = [], []
        for di, wx in ((0, 1 - ax), (1, ax)):
            for dj, wz in ((0, 1 - az), (1, az)):
                if wx * wz != 0.0 and i + di < self.nx and j + dj < self.nz:
                    nodes.append(self.flat_index(i + di, j + dj))
                    weights.append(wx * wz)
        return np.array(nodes), np.array(weights)

    def to_dict(self):
        return {"x0": self.x0, "z0": self.z0, "dx": self.dx, "dz": self.dz,
                "nx": self.nx, "nz": self.nz}

    @staticmethod
    def from_dict(d):
        return ImagingGrid(**d)


# ---------------------------------------------------------------------------
# Preset scenarios
# ---------------------------------------------------------------------------

#: Documented reflector layouts.  Shapes and speeds are configuration
#: choices (thin rectangles/segments at half the background speed, a quarter
#: wavelength thick); only aperture, sensor count and sampling are pinned.
WAVEGUIDE_REFLECTORS = (
    Reflector(x0=10.0, z0=4.0 - 0.125, x1=18.0, z1=4.0 + 0.125, speed=0.5),
    Reflector(x0=8.0, z0=6.0 - 0.125, x1=20.0, z1=6.0 + 0.125, speed=0.5),
)

HALFSPACE_REFLECTORS = (
    Reflector(x0=18.0, z0=4.0, x1=23.0, z1=4.0, speed=0.5,
              thickness=0.25, kind="segment"),
    Reflector(x0=25.0, z0=4.5, x1=29.0, z1=6.0, speed=0.5,
              thickness=0.25, kind="segment"),
    Reflector(x0=20.0, z0=6.5, x1=26.0, z1=6.5, speed=0.5,
              thickness=0.25, kind="segment"),
)


def preset_scenario(name, *, mesh=16, m=None, aperture=None, tau_factor=None,
                    n=None, reflectors=None):
    """Named experiment setup: (medium, array, pulse, tau, n).

    mesh is the number of grid points per wavelength (16 by default, 8 for
    reduced desk-scale runs).  Remaining keyword arguments override the
    preset values.
    """
    from .pulse import Pulse

    h = 1.0 / mesh
    pulse = Pulse()
    if name == "waveguide":
        m = 49 if m is None else m
        aperture = 30.0 if aperture is None else aperture
        tau = (0.4 if tau_factor is None else tau_factor) * np.pi / pulse.omega_c
        n = 61 if n is None else n
        refl = WAVEGUIDE_REFLECTORS if reflectors is None else tuple(reflectors)
        medium = homogeneous_medium(width=32.0, depth=15.0, h=h,
                                    reflectors=refl, strip_depth=2.0)
    elif name == "halfspace":
        m = 49 if m is None else m
        aperture = 18.0 if aperture is None else aperture
        tau = (0.42 if tau_factor is None else tau_factor) * np.pi / pulse.omega_c
        n = 55 if n is None else n
        refl = HALFSPACE_REFLECTORS if reflectors is None else tuple(reflectors)
        medium = homogeneous_medium(width=48.0, depth=13.0, h=h,
                                    reflectors=refl, strip_depth=2.0)
    elif name == "homogeneous":
        m = 49 if m is None else m
        aperture = 30.0 if aperture is None else aperture
        tau = (0.4 if tau_factor is None else tau_factor) * np.pi / pulse.omega_c
        n = 61 if n is None else n
        medium = homogeneous_medium(width=32.0, depth=15.0, h=h,
                                    reflectors=(), strip_depth=2.0)
    else:
        raise ConfigurationError(f"unknown scenario {name!r}")
    array = ArrayGeometry.equispaced(m=m, aperture=aperture,
                                     center_x=medium.width / 2.0, depth=h / 2.0)
    return medium, array, pulse, tau, n
