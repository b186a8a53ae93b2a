"""Small-grid spectral reference for every sampled-data identity.

Assembles the discrete operator A_h = C L C (C = diag(c), L the 5-point
negative Laplacian with the same boundary ghosts as the time-domain solver),
eigendecomposes it and evaluates arbitrary functions phi(sqrt(A_h)) exactly.
This is the brute-force ground truth: data tensors, snapshot fields, mass
and stiffness matrices, propagator projections and internal waves can all
be assembled spectrally and compared entry by entry.

Dense eigendecomposition limits grids to a few thousand nodes; use the
time-domain solver for anything larger.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .medium import ArrayGeometry, ConfigurationError, Medium
from .pulse import Pulse


@dataclass(frozen=True)
class DiscretizedOperator:
    """Eigendecomposition A_h = Y diag(theta) Y^T on a small grid."""

    medium: Medium
    A: np.ndarray
    theta: np.ndarray     # ascending, clamped at zero
    Y: np.ndarray         # orthonormal eigenvectors (columns)

    @property
    def size(self) -> int:
        return self.A.shape[0]

    @property
    def h(self) -> float:
        return self.medium.h

    def flat_index(self, ix, iz):
        return ix * self.medium.nz + iz


def assemble_operator_matrix(medium: Medium) -> np.ndarray:
    """Dense A_h = C L C matching the solver stencil exactly."""
    nx, nz, h = medium.nx, medium.nz, medium.h
    N = nx * nz
    L = np.zeros((N, N))
    idx = lambda i, j: i * nz + j
    hard = {e for e in ("top", "bottom", "left", "right")
            if medium.boundary[e] == "sound_hard"}
    for i in range(nx):
        for j in range(nz):
            k = idx(i, j)
            diag = 4.0
            for di, dj, edge in ((-1, 0, "left"), (1, 0, "right"),
                                 (0, -1, "top"), (0, 1, "bottom")):
                ii, jj = i + di, j + dj
                if 0 <= ii < nx and 0 <= jj < nz:
                    L[k, idx(ii, jj)] -= 1.0
                elif edge in hard:
                    diag -= 1.0   # even ghost cancels one diagonal unit
                else:
                    diag += 1.0   # odd ghost adds one
            L[k, k] = diag
    L /= h * h
    c = medium.c.ravel()
    return (c[:, None] * L) * c[None, :]


def build_operator(medium: Medium, max_nodes: int = 64 * 64) -> DiscretizedOperator:
    if medium.nx * medium.nz > max_nodes:
        raise ConfigurationError(
            f"oracle grid {medium.nx}x{medium.nz} exceeds {max_nodes} nodes")
    A = assemble_operator_matrix(medium)
    theta, Y = np.linalg.eigh(A)
    theta = np.clip(theta, 0.0, None)
    return DiscretizedOperator(medium=medium, A=A, theta=theta, Y=Y)


def apply_function(op: DiscretizedOperator, phi, v: np.ndarray) -> np.ndarray:
    """phi(sqrt(A_h)) v through the spectral decomposition."""
    v = np.asarray(v, dtype=float)
    if v.shape[0] != op.size:
        raise ConfigurationError("vector length does not match the operator")
    w = np.sqrt(op.theta)
    return op.Y @ (phi(w)[..., None] * (op.Y.T @ v) if v.ndim > 1
                   else phi(w) * (op.Y.T @ v))


def sensor_functions(op: DiscretizedOperator, array: ArrayGeometry,
                     pulse: Pulse) -> np.ndarray:
    """Columns delta^f_s = fhat^(1/2)(sqrt(A_h)) delta_s, s = 1..m."""
    ix, iz = array.node_indices(op.medium)
    delta = np.zeros((op.size, array.m))
    delta[ix * op.medium.nz + iz, np.arange(array.m)] = 1.0 / op.h ** 2
    return apply_function(op, pulse.half_spectrum, delta)


def _modal(op, array, pulse):
    """E = Y^T delta^f, the sensor functions in the eigenbasis."""
    return op.Y.T @ sensor_functions(op, array, pulse)


def oracle_data_tensor(op, array, pulse, tau, n):
    """Spectral D_j = <delta^f_r, cos(j tau sqrt(A_h)) delta^f_s> h^2."""
    from .solver import DataTensor

    E = _modal(op, array, pulse)
    w = np.sqrt(op.theta)
    D = np.zeros((2 * n, array.m, array.m))
    for j in range(2 * n):
        D[j] = op.h ** 2 * (E.T * np.cos(j * tau * w)) @ E
    return DataTensor(D=D, tau=tau, n=n, m=array.m)


def oracle_snapshots(op, array, pulse, tau, n):
    """Half-pulse snapshot matrix U (all grid nodes, n*m columns)."""
    from .solver import SnapshotFields

    E = _modal(op, array, pulse)
    w = np.sqrt(op.theta)
    U = np.zeros((op.size, n * array.m))
    for j in range(n):
        U[:, j * array.m:(j + 1) * array.m] = op.Y @ (np.cos(j * tau * w)[:, None] * E)
    return SnapshotFields(grid=None, U=U, tau=tau, n=n, m=array.m)


def oracle_mass(op, array, pulse, tau, n):
    """Quadrature mass matrix <<u_j, u_l>> of the spectral snapshots."""
    E = _modal(op, array, pulse)
    w = np.sqrt(op.theta)
    m = array.m
    M = np.zeros((n * m, n * m))
    cos = [np.cos(j * tau * w) for j in range(n)]
    for j in range(n):
        for l in range(j, n):
            blk = op.h ** 2 * (E.T * (cos[j] * cos[l])) @ E
            M[j * m:(j + 1) * m, l * m:(l + 1) * m] = blk
            M[l * m:(l + 1) * m, j * m:(j + 1) * m] = blk.T
    return M

def oracle_stiffness(op, array, pulse, tau, n):
    """Quadrature stiffness <<u_j, P u_l>> with P = cos(tau sqrt(A_h))."""
    E = _modal(op, array, pulse)
    w = np.sqrt(op.theta)
    m = array.m
    S = np.zeros((n * m, n * m))
    cos = [np.cos(j * tau * w) for j in range(n)]
    prop = np.cos(tau * w)
    for j in range(n):
        for l in range(j, n):
            blk = op.h ** 2 * (E.T * (cos[j] * prop * cos[l])) @ E
            S[j * m:(j + 1) * m, l * m:(l + 1) * m] = blk
            S[l * m:(l + 1) * m, j * m:(j + 1) * m] = blk.T
    return S


def oracle_propagator_projection(op, V, tau):
    """h^2 V^T cos(tau sqrt(A_h)) V for a basis on the full oracle grid."""
    w = np.sqrt(op.theta)
    VY = op.Y.T @ V
    return op.h ** 2 * (VY.T * np.cos(tau * w)) @ VY


def oracle_internal_wave(op, array, pulse, y_node, V_o_row, R, U_true,
                         tau, n):
    """Direct spectral internal wave g(t_j, x_r; y), an (n, m) matrix.

    Builds the point spread field  delta_y = V(x) V_o(y)^T  from the true
    orthonormal snapshots V = U_true R^{-1}, applies
    fhat^(1/2)(sqrt(A)) cos(t_j sqrt(A)) and reads the sensor nodes.  This
    is the independent evaluation that the factor identity must reproduce.
    """
    from .rom import solve_upper_left

    V = solve_upper_left(R, U_true.T).T          # V = U R^{-1}
    psf = V @ np.asarray(V_o_row)
    w = np.sqrt(op.theta)
    half = pulse.half_spectrum(w)
    ix, iz = array.node_indices(op.medium)
    nodes = ix * op.medium.nz + iz
    modal = op.Y.T @ psf
    out = np.zeros((n, array.m))
    for j in range(n):
        field = op.Y @ (half * np.cos(j * tau * w) * modal)
        out[j] = field[nodes]
    return out
