"""Imaging functions over the imaging grid.

Four ways to turn array data into an image:

* norm: squared sensor norm of the estimated internal wave,
  I(y) = || V_o(y) R ||_F^2.  Needs only the factor R and the reference
  basis; one matrix product for the whole grid.
* ideal: same functional built from the exact interior wave launched at y
  (one extra true-medium solve per pixel; a simulation-only diagnostic).
* backprojection: quadratic form of the propagator difference,
  I_BP(y) = V_o(y) (P - P_o) V_o(y)^T.
* rtm: reverse-time migration of the sampled data through the reference
  medium, zero-lag cross correlation of source and receiver wavefields.
* pixel scan: time-reverse the internal wave, re-emit it as an array
  control in the true medium and match the backscattered wave against the
  internal wave.

Range-derivative postprocessing (Gaussian smoothing along range followed by
a centered difference) removes the slowly varying background that builds up
near the array.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline

from .internal import SnapshotBasis, internal_wave
from .medium import ArrayGeometry, ConfigurationError, ImagingGrid, Medium
from .pulse import Pulse, discrete_sources
from .rom import BlockMatrix
from .solver import (DataTensor, PointSource, ideal_response, propagate,
                     solver_step)

NORM = "norm"
IDEAL = "ideal"
BACKPROJECTION = "bp"
RTM = "rtm"
PIXEL_SCAN = "ps"
RANGE_DERIVATIVE = "range_derivative"


@dataclass(frozen=True)
class Image:
    grid: ImagingGrid
    values: np.ndarray           # (grid.nx, grid.nz)
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ConfigurationError("image values do not match the grid")
        if not np.all(np.isfinite(self.values[~np.isnan(self.values)])):
            raise ConfigurationError("image contains non-finite values")


def image_norm(R: BlockMatrix, basis_ref: SnapshotBasis, params=None) -> Image:
    """I(y) = sum_{r,j} g(j tau, x_r; y)^2 for every imaging node."""
    W = basis_ref.V @ R.data
    vals = np.einsum("ij,ij->i", W, W).reshape(basis_ref.grid.shape)
    return Image(grid=basis_ref.grid, values=vals, kind=NORM,
                 params=dict(params or {}))


def image_ideal(medium_true: Medium, array: ArrayGeometry, pulse: Pulse,
                tau: float, n: int, grid: ImagingGrid, points=None,
                budget: int = 512, cfl: float = 0.5, params=None) -> Image:
    """Ideal-wave diagnostic: one true-medium solve per evaluated pixel.

    `points` restricts evaluation to a list of (x, z); without it the whole
    grid is solved, refused above `budget` pixels.  Unevaluated nodes are
    NaN.
    """
    if points is None:
        if grid.size > budget:
            raise ConfigurationError(
                f"ideal image over {grid.size} pixels exceeds the per-pixel "
                f"solve budget ({budget}); pass an explicit point list")
        points = [(x, z) for x in grid.x for z in grid.z]
    vals = np.full(grid.shape, np.nan)
    for (x, z) in points:
        g = ideal_response(medium_true, array, pulse, (x, z), tau, n, cfl)
        vals[grid.node_of(x, z)] = float(np.sum(g * g))
    return Image(grid=grid, values=vals, kind=IDEAL, params=dict(params or {}))


def image_backprojection(P: BlockMatrix, P_ref: BlockMatrix,
                         basis_ref: SnapshotBasis, params=None) -> Image:
    """I_BP(y) = V_o(y) (P - P_o) V_o(y)^T per imaging node."""
    if P.data.shape != P_ref.data.shape:
        raise ConfigurationError("propagator dimensions do not match")
    W = basis_ref.V @ (P.data - P_ref.data)
    vals = np.einsum("ij,ij->i", W, basis_ref.V).reshape(basis_ref.grid.shape)
    return Image(grid=basis_ref.grid, values=vals, kind=BACKPROJECTION,
                 params=dict(params or {}))


# ---------------------------------------------------------------------------
# Reverse-time migration
# ---------------------------------------------------------------------------

def _spline_sources(nodes, samples_matrix, times, dt, k_end):
    """Per-node sources from tau-sampled traces, cubic in time."""
    t_dense = np.arange(0, k_end + 1) * dt
    out = []
    for i, node in enumerate(nodes):
        spline = CubicSpline(times, samples_matrix[:, i], bc_type="natural")
        dense = spline(t_dense)
        dense[t_dense > times[-1]] = 0.0
        out.append(PointSource(ix=node[0], iz=node[1], samples=dense, k0=0))
    return out


def image_rtm(data: DataTensor, medium_ref: Medium, array: ArrayGeometry,
              pulse: Pulse, grid: ImagingGrid, cfl: float = 0.5,
              params=None) -> Image:
    """Reverse-time migration of the sampled data in the reference medium.

    For every shot, the probing pulse is propagated forward from the source
    and the measured receiver traces are propagated in reversed time; the
    zero-lag correlation of the two fields accumulates into the image
    (2m reference solves).  The image is normalized to unit peak.
    """
    dt, ksteps = solver_step(medium_ref, data.tau, cfl)
    samples = discrete_sources(pulse, dt)
    ix, iz = array.node_indices(medium_ref)
    nodes = list(zip(ix, iz))
    pix = grid.solver_indices(medium_ref)
    k_end = (2 * data.n - 1) * ksteps
    corr_steps = [j * ksteps for j in range(2 * data.n)]
    t_samples = np.arange(2 * data.n) * data.tau

    image = np.zeros(grid.size)
    K = samples.full_steps
    dense_fwd = np.concatenate([-samples.full[::-1], [0.0], samples.full])
    for s in range(data.m):
        src = PointSource(ix=nodes[s][0], iz=nodes[s][1],
                          samples=dense_fwd, k0=-K)
        _, fwd = propagate(medium_ref, dt, [src], k_start=-K - 1, k_end=k_end,
                           field_steps=corr_steps, field_nodes=pix)
        rev_sources = _spline_sources(
            nodes, data.D[::-1, s, :], t_samples, dt, k_end)
        _, bwd = propagate(medium_ref, dt, rev_sources, k_start=0, k_end=k_end,
                           field_steps=corr_steps, field_nodes=pix)
        # bwd row i holds the reversed wavefield at reversed time i*tau
        image += np.einsum("ij,ij->j", fwd, bwd[::-1])
    peak = np.max(np.abs(image))
    if peak > 0:
        image /= peak
    return Image(grid=grid, values=image.reshape(grid.shape), kind=RTM,
                 params=dict(params or {}))


# ---------------------------------------------------------------------------
# Pixel scanning
# ---------------------------------------------------------------------------

def focusing_control(g_samples: np.ndarray, tau: float, dt: float, k_end: int):
    """Array control: time-reversed internal wave on the solver time grid.

    g_samples has n+1 rows (samples at j*tau, j = 0..n); the control is
    supported on [0, n tau] and interpolated cubically per sensor.  Returns
    the control samples and their time derivative, shape (steps, m).
    """
    n = g_samples.shape[0] - 1
    t_nodes = np.arange(n + 1) * tau
    t_dense = np.arange(0, k_end + 1) * dt
    spline = CubicSpline(t_nodes, g_samples[::-1], axis=0, bc_type="natural")
    inside = t_dense <= n * tau + 1e-12
    control = np.zeros((len(t_dense), g_samples.shape[1]))
    dcontrol = np.zeros_like(control)
    control[inside] = spline(t_dense[inside])
    dcontrol[inside] = spline(t_dense[inside], 1)
    return control, dcontrol


def pixel_scan_response(R: BlockMatrix, basis_ref: SnapshotBasis,
                        data: DataTensor, medium_true: Medium,
                        array: ArrayGeometry, pulse: Pulse, y,
                        cfl: float = 0.5, focus_field_nodes=None):
    """One pixel-scan experiment: emit the control, record the response.

    Returns (value, diagnostics) where value is the matched-field
    correlation sum_r int_0^{n tau} gamma(n tau + t, x_r) g(t, x_r) dt
    (trapezoid at step tau) and diagnostics carries the internal wave, the
    sensor traces of gamma and, if requested, the field at the focus time.
    """
    n, m, tau = R.n, R.m, basis_ref.tau
    g = internal_wave(R, basis_ref, y, data=data, extend=True).values  # (n+1, m)
    dt, ksteps = solver_step(medium_true, tau, cfl)
    k_end = 2 * n * ksteps
    _, dcontrol = focusing_control(g, tau, dt, k_end)

    ix, iz = array.node_indices(medium_true)
    nodes = list(zip(ix, iz))
    sources = [PointSource(ix=nodes[s][0], iz=nodes[s][1],
                           samples=dcontrol[:, s], k0=0)
               for s in range(m)]
    field_steps = [n * ksteps] if focus_field_nodes is not None else None
    traces, fields = propagate(
        medium_true, dt, sources, k_start=0, k_end=k_end,
        trace_nodes=nodes, field_steps=field_steps,
        field_nodes=focus_field_nodes if focus_field_nodes is not None else None)

    gamma = traces[::ksteps]                  # (2n+1, m) at multiples of tau
    weights = np.ones(n + 1)
    weights[0] = weights[-1] = 0.5
    value = float(np.sum(weights[:, None] * gamma[n:2 * n + 1] * g) * tau)
    diagnostics = {"g": g, "gamma": gamma, "traces": traces, "dt": dt,
                   "focus_field": fields[0] if fields is not None else None}
    return value, diagnostics


def image_pixel_scan(R: BlockMatrix, basis_ref: SnapshotBasis,
                     data: DataTensor, medium_true: Medium,
                     array: ArrayGeometry, pulse: Pulse, points,
                     budget: int = 256, cfl: float = 0.5,
                     params=None) -> Image:
    """Pixel-scanning image over an explicit point list (one solve each)."""
    points = list(points)
    if len(points) > budget:
        raise ConfigurationError(
            f"pixel scan over {len(points)} pixels needs {len(points)} "
            f"true-medium solves, above the budget of {budget}")
    grid = basis_ref.grid
    vals = np.full(grid.shape, np.nan)
    for y in points:
        value, _ = pixel_scan_response(R, basis_ref, data, medium_true,
                                       array, pulse, y, cfl)
        vals[grid.node_of(*y)] = value
    return Image(grid=grid, values=vals, kind=PIXEL_SCAN,
                 params=dict(params or {}))


# ---------------------------------------------------------------------------
# Postprocessing and profile helpers
# ---------------------------------------------------------------------------

def range_derivative(img: Image, sigma: float = 0.05) -> Image:
    """Centered range derivative after Gaussian smoothing along range."""
    dz = img.grid.dz
    params = dict(img.params)
    params["sigma"] = sigma
    if dz > sigma:
        params.setdefault("warnings", []).append(
            f"grid spacing {dz:g} exceeds smoothing width {sigma:g}")
    half = max(int(np.ceil(4 * sigma / dz)), 1)
    kern = np.exp(-0.5 * ((np.arange(-half, half + 1) * dz) / sigma) ** 2)
    kern /= kern.sum()
    padded = np.pad(img.values, ((0, 0), (half, half)), mode="edge")
    smooth = np.apply_along_axis(
        lambda row: np.convolve(row, kern, mode="valid"), 1, padded)
    deriv = np.gradient(smooth, dz, axis=1)
    return Image(grid=img.grid, values=deriv, kind=RANGE_DERIVATIVE,
                 params=params)


def range_profile(img: Image, x_window=None) -> np.ndarray:
    """max |image| over cross-range at every range node."""
    vals = np.abs(np.nan_to_num(img.values))
    if x_window is not None:
        keep = (img.grid.x >= x_window[0]) & (img.grid.x <= x_window[1])
        vals = vals[keep]
    return vals.max(axis=0)


def profile_peaks(profile: np.ndarray, z: np.ndarray, min_height: float = 0.0):
    """Ranges of local maxima of a profile, tallest first."""
    from scipy.signal import find_peaks

    idx, _ = find_peaks(profile, height=min_height)
    order = np.argsort(profile[idx])[::-1]
    return z[idx][order], profile[idx][order]
