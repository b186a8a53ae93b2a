"""Orthonormal snapshot bases, internal waves and the point spread function.

The orthonormalized snapshots V(x) = U(x) R^{-1} (Gram-Schmidt through the
block Cholesky factor of the mass matrix) are the bridge between array data
and the interior: with the factor R of the measured mass matrix and the
reference basis V_o evaluated at an imaging point y, the wave that
originates near y and is observed at the sensors at times j*tau is exactly

    (g(t_j, x_1; y), ..., g(t_j, x_m; y)) = V_o(y) R e_j .

This identity is pure linear algebra once the same mass matrix underlies
both factors, which is what the consistent source sampling in the solver
guarantees.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .medium import ConfigurationError, ImagingGrid
from .rom import (BlockMatrix, assemble_mass, block_cholesky, default_lambda_min,
                  regularize_mass, solve_upper, solve_upper_left)
from .solver import (DataTensor, SnapshotFields, compute_data_tensor,
                     simulate_all_shots, simulate_snapshots)


@dataclass(frozen=True)
class SnapshotBasis:
    """Orthonormal snapshot fields on an imaging grid plus their factor."""

    grid: ImagingGrid
    V: np.ndarray          # (npix, n*m), column j*m+s = v_j^(s)
    R: BlockMatrix         # factor used in the orthogonalization
    tau: float
    n: int
    m: int

    def row(self, y):
        """V(y) as an (n*m,) row, bilinear between imaging nodes."""
        nodes, weights = self.grid.interp_weights(*y)
        return weights @ self.V[nodes]


@dataclass(frozen=True)
class InternalWave:
    values: np.ndarray     # (n, m); values[j, r] = g(j tau, x_r; y)
    y: tuple
    tau: float


def basis_from(data: DataTensor, fields: SnapshotFields,
               lambda_min: float | None = None) -> SnapshotBasis:
    """Orthonormal basis from measured data and stored snapshot fields."""
    if (data.n, data.m, data.tau) != (fields.n, fields.m, fields.tau):
        raise ConfigurationError("data and snapshot fields do not match")
    M = assemble_mass(data)
    if lambda_min is None:
        lambda_min = default_lambda_min(M, noisy=False)
    R = block_cholesky(regularize_mass(M, lambda_min))
    V = solve_upper_left(R, fields.U.T).T
    return SnapshotBasis(grid=fields.grid, V=V, R=R, tau=data.tau,
                         n=data.n, m=data.m)


def build_reference_basis(medium_ref, array, pulse, tau, n, grid,
                          lambda_min: float | None = None,
                          cfl: float = 0.5) -> SnapshotBasis:
    """Simulate the reference medium and orthonormalize its snapshots.

    Runs the reference shots for the data matrices, factors the reference
    mass matrix and applies the factor to the stored snapshot fields on the
    imaging grid.
    """
    if not medium_ref.is_reference():
        raise ConfigurationError("reference basis needs c = c_ref everywhere")
    records = simulate_all_shots(medium_ref, array, pulse, tau, n, cfl)
    data = compute_data_tensor(records)
    fields = simulate_snapshots(medium_ref, array, pulse, tau, n, grid, cfl)
    return basis_from(data, fields, lambda_min)


def internal_wave(R: BlockMatrix, basis: SnapshotBasis, y,
                  data: DataTensor | None = None,
                  extend: bool = False) -> InternalWave:
    """Estimated internal wave at the sensors, g(j tau, x_r; y) = V_o(y) R e_j.

    With `extend`, one extra sample row at t = n*tau is appended using the
    data matrices directly (the factor identity only covers j < n); `data`
    must then be supplied.
    """
    row = basis.row(y)
    G = (row @ R.data).reshape(R.n, R.m)
    if extend:
        if data is None:
            raise ConfigurationError("extension to t = n tau needs the data tensor")
        sigma = solve_upper(R, row)
        n, m = R.n, R.m
        ext = np.zeros(m)
        for l in range(n):
            blk = 0.5 * (data.D[n + l] + data.D[n - l])
            ext += blk @ sigma[l * m:(l + 1) * m]
        G = np.vstack([G, ext])
    return InternalWave(values=G, y=tuple(y), tau=basis.tau)


def rom_psf(basis_true: SnapshotBasis, basis_ref: SnapshotBasis, y) -> np.ndarray:
    """Point spread field V(x) V_o(y)^T over the true basis grid."""
    if basis_true.grid != basis_ref.grid:
        raise ConfigurationError("bases live on different grids")
    field = basis_true.V @ basis_ref.row(y)
    return field.reshape(basis_true.grid.shape)


def psf_norm(basis_ref: SnapshotBasis, y) -> float:
    """Squared L2 norm of the point spread field, sum of V_o(y)^2.

    Depends only on the reference basis (orthonormality of the true one),
    so it is insensitive to the reflectors.
    """
    row = basis_ref.row(y)
    return float(row @ row)


def peak_to_sidelobe(field: np.ndarray, grid: ImagingGrid, y,
                     peak_radius: float = 0.5, exclude_radius: float = 1.0):
    """max |field| within peak_radius of y over max |field| beyond exclude."""
    X, Z = np.meshgrid(grid.x, grid.z, indexing="ij")
    dist2 = (X - y[0]) ** 2 + (Z - y[1]) ** 2
    a = np.abs(field)
    peak = float(np.max(a[dist2 <= peak_radius ** 2]))
    side = float(np.max(a[dist2 > exclude_radius ** 2]))
    return peak / side
