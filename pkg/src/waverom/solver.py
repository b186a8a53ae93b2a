"""Finite-difference time-domain simulator for the self-adjoint wave equation.

Evolves w(t, x) with

    w_tt + A(c) w = s(t) * delta_h(x - x_src),    A(c) = -c Laplacian(c .),

by second-order centered differences (leapfrog) on a cell-centered square
grid.  One wall is sound hard (homogeneous Neumann, the accessible boundary
next to the array), the others sound soft (homogeneous Dirichlet); the
cell-centered layout keeps the discrete operator exactly symmetric, so
reciprocity and the sampled-data trigonometric identities hold to rounding.

The physical pressure is p = c w; receivers read w directly at grid nodes.
Runs start before the source onset with quiescent fields, so the negative
time window needed for the even extension of the data is recorded rather
than recomputed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .medium import ArrayGeometry, ConfigurationError, ImagingGrid, Medium
from .pulse import Pulse, SourceSamples, discrete_sources


def stability_limit(medium: Medium) -> float:
    """Largest stable leapfrog step h / (sqrt(2) c_max)."""
    return medium.h / (np.sqrt(2.0) * float(np.max(medium.c)))


def solver_step(medium: Medium, tau: float, cfl: float = 0.5):
    """Largest step with the given CFL factor that divides tau evenly.

    Returns (dt, steps_per_tau); data samples then land on exact steps.
    """
    if tau <= 0:
        raise ConfigurationError("tau must be positive")
    dt_max = cfl * stability_limit(medium)
    k = int(np.ceil(tau / dt_max - 1e-12))
    return tau / k, k


@dataclass(frozen=True)
class PointSource:
    ix: int
    iz: int
    samples: np.ndarray  # samples[i] acts at step k0 + i
    k0: int


class _Engine:
    """Leapfrog state and the 5-point operator with boundary ghosts."""

    def __init__(self, medium: Medium, dt: float):
        if dt > stability_limit(medium) * (1 + 1e-12):
            raise ConfigurationError(
                f"time step {dt:g} violates the stability bound "
                f"{stability_limit(medium):g}")
        self.medium = medium
        self.dt = dt
        self.c = medium.c
        self.h2 = medium.h ** 2
        self._pad = np.zeros((medium.nx + 2, medium.nz + 2))

    def apply_operator(self, w):
        """A(c) w = c * (-Laplacian)(c w) with ghost-cell boundaries."""
        med = self.medium
        q = self.c * w
        p = self._pad
        p[1:-1, 1:-1] = q
        # top/bottom are z edges (axis 1), left/right are x edges (axis 0)
        p[1:-1, 0] = q[:, 0] if med.boundary["top"] == "sound_hard" else -q[:, 0]
        p[1:-1, -1] = q[:, -1] if med.boundary["bottom"] == "sound_hard" else -q[:, -1]
        p[0, 1:-1] = q[0, :] if med.boundary["left"] == "sound_hard" else -q[0, :]
        p[-1, 1:-1] = q[-1, :] if med.boundary["right"] == "sound_hard" else -q[-1, :]
        lap = (4.0 * q - p[:-2, 1:-1] - p[2:, 1:-1]
               - p[1:-1, :-2] - p[1:-1, 2:]) / self.h2
        return self.c * lap


def discrete_energy(medium: Medium, w_prev, w_next, dt):
    """Conserved leapfrog energy between consecutive states."""
    eng = _Engine(medium, dt)
    kin = 0.5 * np.sum(((w_next - w_prev) / dt) ** 2)
    pot = 0.5 * np.sum(w_next * eng.apply_operator(w_prev))
    return (kin + pot) * medium.h ** 2


def propagate(medium: Medium, dt: float, sources, k_start: int, k_end: int,
              trace_nodes=None, field_steps=None, field_nodes=None):
    """Run the leapfrog from step k_start (zero state) through k_end.

    sources: iterable of PointSource (amplitudes are multiplied by 1/h^2,
    the discrete Dirac normalization).
    trace_nodes: list of (ix, iz) recorded at every step.
    field_steps: sorted iterable of steps at which the field is stored,
    restricted to flat node indices `field_nodes` (None stores all nodes).

    Returns (traces, fields): traces has shape (k_end-k_start+1, len(nodes)),
    row r is the state at step k_start + r; fields has one row per entry of
    field_steps.
    """
    eng = _Engine(medium, dt)
    nx, nz = medium.nx, medium.nz
    inv_h2 = 1.0 / medium.h ** 2
    dt2 = dt * dt

    srcs = [(s.ix, s.iz, np.asarray(s.samples, float), s.k0) for s in sources]
    n_steps = k_end - k_start + 1

    traces = None
    trace_ij = None
    if trace_nodes is not None:
        trace_ij = (np.array([n[0] for n in trace_nodes]),
                    np.array([n[1] for n in trace_nodes]))
        traces = np.zeros((n_steps, len(trace_nodes)))

    fields = None
    step_row = {}
    if field_steps is not None:
        field_steps = sorted(field_steps)
        width = len(field_nodes) if field_nodes is not None else nx * nz
        fields = np.zeros((len(field_steps), width))
        step_row = {k: i for i, k in enumerate(field_steps)}

    w_prev = np.zeros((nx, nz))
    w = np.zeros((nx, nz))

    def record(k, state):
        if traces is not None:
            traces[k - k_start] = state[trace_ij]
        row = step_row.get(k)
        if row is not None:
            flat = state.ravel()
            fields[row] = flat if field_nodes is None else flat[field_nodes]

    record(k_start, w)
    for k in range(k_start, k_end):
        w_next = 2.0 * w - w_prev - dt2 * eng.apply_operator(w)
        for ix, iz, samp, k0 in srcs:
            i = k - k0
            if 0 <= i < len(samp):
                w_next[ix, iz] += dt2 * samp[i] * inv_h2
        w_prev, w = w, w_next
        record(k + 1, w)
    return traces, fields


# ---------------------------------------------------------------------------
# Array data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShotRecord:
    """Traces of one shot at all receivers, solver rate, negative window."""

    source_index: int        # 1-based sensor index
    m: int
    tau: float
    n: int
    dt: float
    k_start: int             # first recorded step; t = k * dt
    traces: np.ndarray       # (steps, m)

    @property
    def tau_steps(self) -> int:
        return int(round(self.tau / self.dt))

    @property
    def times(self):
        return (self.k_start + np.arange(self.traces.shape[0])) * self.dt

    def at_step(self, k):
        """Trace row at absolute step k; zero before the recorded window."""
        r = k - self.k_start
        if r < 0:
            return np.zeros(self.m)
        return self.traces[r]

    def sample(self, j):
        """Even-extended data row w_e(j tau) = w(j tau) + w(-j tau)."""
        ks = j * self.tau_steps
        return self.at_step(ks) + self.at_step(-ks)


def _source_sequence(samples: SourceSamples, kind: str):
    onesided = samples.half if kind == "half" else samples.full
    K = len(onesided)
    dense = np.concatenate([-onesided[::-1], [0.0], onesided])
    return dense, -K  # samples[i] acts at step k0 + i with k0 = -K


def _run_shot(medium, dt, node, samples, kind, k_last, trace_nodes=None,
              field_steps=None, field_nodes=None):
    dense, k0 = _source_sequence(samples, kind)
    src = PointSource(ix=node[0], iz=node[1], samples=dense, k0=k0)
    return propagate(medium, dt, [src], k_start=k0 - 1, k_end=k_last,
                     trace_nodes=trace_nodes, field_steps=field_steps,
                     field_nodes=field_nodes), k0 - 1


def simulate_shot(medium: Medium, array: ArrayGeometry, pulse: Pulse,
                  source_index: int, tau: float, n: int,
                  cfl: float = 0.5) -> ShotRecord:
    """Forward model one probing shot; source_index is 1-based."""
    if not (1 <= source_index <= array.m):
        raise ConfigurationError("source index out of range")
    if medium.h > 0.25 + 1e-12:
        raise ConfigurationError("grid too coarse: need >= 4 points per wavelength")
    dt, ksteps = solver_step(medium, tau, cfl)
    samples = discrete_sources(pulse, dt)
    ix, iz = array.node_indices(medium)
    nodes = list(zip(ix, iz))
    k_last = (2 * n - 1) * ksteps
    (traces, _), k_start = _run_shot(
        medium, dt, nodes[source_index - 1], samples, "full", k_last,
        trace_nodes=nodes)
    return ShotRecord(source_index=source_index, m=array.m, tau=tau, n=n,
                      dt=dt, k_start=k_start, traces=traces)


def simulate_all_shots(medium, array, pulse, tau, n, cfl=0.5):
    return [simulate_shot(medium, array, pulse, s, tau, n, cfl)
            for s in range(1, array.m + 1)]


@dataclass(frozen=True)
class DataTensor:
    """The 2n sampled m x m array data matrices D_j."""

    D: np.ndarray            # (2n, m, m), D[j, s, r]
    tau: float
    n: int
    m: int

    def __post_init__(self):
        if self.D.shape != (2 * self.n, self.m, self.m):
            raise ConfigurationError("data tensor shape mismatch")

    def subsample(self, factor: int, n_new: int | None = None) -> "DataTensor":
        """Data of the same experiment sampled at factor * tau."""
        if n_new is None:
            n_new = self.n // factor
        if factor * (2 * n_new - 1) > 2 * self.n - 1:
            raise ConfigurationError("not enough samples for this resampling")
        return DataTensor(D=self.D[::factor][: 2 * n_new].copy(),
                          tau=self.tau * factor, n=n_new, m=self.m)

    def subarray(self, idx) -> "DataTensor":
        """Data restricted to a sensor subset (smaller aperture)."""
        idx = np.asarray(idx)
        return DataTensor(D=self.D[:, idx[:, None], idx[None, :]].copy(),
                          tau=self.tau, n=self.n, m=len(idx))


def compute_data_tensor(records) -> DataTensor:
    """Assemble D_j from the recorded shots (even extension in time)."""
    if not records:
        raise ConfigurationError("no shot records")
    first = records[0]
    m, n, tau = first.m, first.n, first.tau
    if len(records) != m:
        raise ConfigurationError("need one shot record per sensor")
    by_source = {}
    for r in records:
        if (r.m, r.n, r.tau, r.dt, r.k_start) != (m, n, tau, first.dt, first.k_start):
            raise ConfigurationError("shot records have mismatched sampling")
        by_source[r.source_index] = r
    if sorted(by_source) != list(range(1, m + 1)):
        raise ConfigurationError("shot records do not cover all sources")
    D = np.zeros((2 * n, m, m))
    for s in range(1, m + 1):
        rec = by_source[s]
        for j in range(2 * n):
            D[j, s - 1] = rec.sample(j)
    return DataTensor(D=D, tau=tau, n=n, m=m)


# ---------------------------------------------------------------------------
# Snapshot fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SnapshotFields:
    """Half-pulse snapshot fields u_j^(s) stacked as a (npix, n*m) matrix.

    Column j*m + s holds u_j^(s) on the grid; the Gram matrix of the columns
    (times h^d) equals the data-assembled mass matrix.
    """

    grid: ImagingGrid | None
    U: np.ndarray
    tau: float
    n: int
    m: int

    def subsample(self, factor: int, n_new: int | None = None) -> "SnapshotFields":
        if n_new is None:
            n_new = self.n // factor
        if factor * (n_new - 1) > self.n - 1:
            raise ConfigurationError("not enough snapshots for this resampling")
        cols = (factor * np.repeat(np.arange(n_new), self.m) * self.m
                + np.tile(np.arange(self.m), n_new))
        return SnapshotFields(grid=self.grid, U=self.U[:, cols].copy(),
                              tau=self.tau * factor, n=n_new, m=self.m)

    def subarray(self, idx) -> "SnapshotFields":
        idx = np.asarray(idx)
        cols = (np.repeat(np.arange(self.n), len(idx)) * self.m
                + np.tile(idx, self.n))
        return SnapshotFields(grid=self.grid, U=self.U[:, cols].copy(),
                              tau=self.tau, n=self.n, m=len(idx))


def simulate_snapshots(medium: Medium, array: ArrayGeometry, pulse: Pulse,
                       tau: float, n: int, grid: ImagingGrid | None = None,
                       cfl: float = 0.5) -> SnapshotFields:
    """Snapshot fields u_j(x) = w_e(j tau, x) of the half-pulse wave.

    Snapshots are driven by the half pulse so their Gram matrix reproduces
    the measured data matrices; see the pulse module.  `grid` restricts
    storage to an imaging lattice (None keeps the full solver grid).
    """
    dt, ksteps = solver_step(medium, tau, cfl)
    samples = discrete_sources(pulse, dt)
    ix, iz = array.node_indices(medium)
    nodes = list(zip(ix, iz))
    if grid is None:
        grid = ImagingGrid.full(medium)
    field_nodes = grid.solver_indices(medium)
    npix = len(field_nodes)

    k0 = -samples.half_steps - 1
    pos = [j * ksteps for j in range(n)]
    neg = [-j * ksteps for j in range(1, n) if -j * ksteps >= k0]
    steps = sorted(set(pos + neg))

    U = np.zeros((npix, n * array.m))
    for s in range(array.m):
        (_, fields), _ = _run_shot(
            medium, dt, nodes[s], samples, "half", (n - 1) * ksteps,
            field_steps=steps, field_nodes=field_nodes)
        row = {k: i for i, k in enumerate(steps)}
        for j in range(n):
            u = fields[row[j * ksteps]].copy()
            if -j * ksteps in row:
                u += fields[row[-j * ksteps]]
            U[:, j * array.m + s] = u
    return SnapshotFields(grid=grid, U=U, tau=tau, n=n, m=array.m)


def ideal_response(medium: Medium, array: ArrayGeometry, pulse: Pulse,
                   point, tau: float, n: int, cfl: float = 0.5) -> np.ndarray:
    """Half-pulse wave launched at `point`, even-extended at the sensors.

    Returns the (n, m) samples of the wave cos(t sqrt(A)) delta^f_point at
    the array; needs the true medium, one solve per point.
    """
    dt, ksteps = solver_step(medium, tau, cfl)
    samples = discrete_sources(pulse, dt)
    ix, iz = array.node_indices(medium)
    nodes = list(zip(ix, iz))
    node = medium.nearest_node(*point)
    (traces, _), k_start = _run_shot(medium, dt, node, samples, "half",
                                     (n - 1) * ksteps, trace_nodes=nodes)
    out = np.zeros((n, array.m))
    for j in range(n):
        ks = j * ksteps
        row = traces[ks - k_start]
        if -ks >= k_start:
            row = row + traces[-ks - k_start]
        out[j] = row
    return out
