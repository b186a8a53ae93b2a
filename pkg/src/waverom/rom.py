"""Data-driven reduced order model: mass, stiffness, factor, propagator.

All matrices are nm x nm with m x m block structure; block (j, l) addresses
snapshot times j*tau and l*tau.  The mass and stiffness matrices come
straight from the sampled data matrices through cosine product identities:

    M_jl = (D_{j+l} + D_{|j-l|}) / 2
    S_jl = (D_{j+l+1} + D_{|j-l-1|} + D_{|j+l-1|} + D_{|j-l+1|}) / 4

The block Cholesky factor R (M = R^T R, block upper triangular, symmetric
positive definite diagonal blocks) encodes the causal wave front: column
block j of R is the reduced-order state at time j*tau, and its blocks below
the diagonal vanish because early snapshots cannot reach deep range.

The reduced propagator R^{-T} S R^{-1} is always formed with block
substitutions; the factor is never inverted explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .medium import ConfigurationError
from .solver import DataTensor, ShotRecord

GENERAL = "general"
SPD = "spd"
BLOCK_UPPER = "block_upper"


class FactorizationError(ArithmeticError):
    """A pivot block is not positive definite (insufficient regularization)."""


@dataclass(frozen=True)
class BlockMatrix:
    data: np.ndarray
    n: int
    m: int
    structure: str = GENERAL

    def __post_init__(self):
        nm = self.n * self.m
        if self.data.shape != (nm, nm):
            raise ConfigurationError("block matrix shape mismatch")

    def block(self, i, j):
        m = self.m
        return self.data[i * m:(i + 1) * m, j * m:(j + 1) * m]

    @property
    def nm(self):
        return self.n * self.m


def assemble_mass(data: DataTensor) -> BlockMatrix:
    """Data-driven mass matrix (Gram matrix of the snapshots)."""
    n, m, D = data.n, data.m, data.D
    if D.shape[0] < 2 * n - 1:
        raise ConfigurationError("need data up to index 2n-2 for the mass matrix")
    M = np.zeros((n * m, n * m))
    for j in range(n):
        for l in range(n):
            M[j * m:(j + 1) * m, l * m:(l + 1) * m] = \
                0.5 * (D[j + l] + D[abs(j - l)])
    return BlockMatrix(data=M, n=n, m=m, structure=GENERAL)


def assemble_stiffness(data: DataTensor) -> BlockMatrix:
    """Data-driven stiffness matrix (snapshots against the propagator)."""
    n, m, D = data.n, data.m, data.D
    if D.shape[0] < 2 * n:
        raise ConfigurationError("need data up to index 2n-1 for the stiffness")
    S = np.zeros((n * m, n * m))
    for j in range(n):
        for l in range(n):
            S[j * m:(j + 1) * m, l * m:(l + 1) * m] = 0.25 * (
                D[j + l + 1] + D[abs(j - l - 1)]
                + D[abs(j + l - 1)] + D[abs(j - l + 1)])
    return BlockMatrix(data=S, n=n, m=m, structure=GENERAL)


def default_lambda_min(M: BlockMatrix, noisy: bool) -> float:
    """Eigenvalue floor: 1e-8 (noiseless) or 1e-3 (noisy) of the largest."""
    top = float(np.linalg.eigvalsh(0.5 * (M.data + M.data.T))[-1])
    return (1e-3 if noisy else 1e-8) * top


def regularize_mass(M: BlockMatrix, lambda_min: float) -> BlockMatrix:
    """Clamp the spectrum of the (symmetrized) mass matrix at lambda_min."""
    if lambda_min <= 0:
        raise ConfigurationError("lambda_min must be positive")
    sym = 0.5 * (M.data + M.data.T)
    lam, W = np.linalg.eigh(sym)
    if lam[0] >= lambda_min:
        return replace(M, data=sym, structure=SPD)
    clamped = np.maximum(lam, lambda_min)
    return replace(M, data=(W * clamped) @ W.T, structure=SPD)


def _spd_sqrt(block: np.ndarray, rel_tol: float = 1e-13) -> np.ndarray:
    lam, W = np.linalg.eigh(0.5 * (block + block.T))
    if lam[0] <= rel_tol * max(lam[-1], 0.0) or lam[-1] <= 0.0:
        raise FactorizationError(
            "pivot block is not positive definite; increase the "
            "regularization floor")
    return (W * np.sqrt(lam)) @ W.T


def block_cholesky(M: BlockMatrix) -> BlockMatrix:
    """Block factor M = R^T R, upper triangular with SPD diagonal blocks.

    Diagonal blocks are the symmetric square roots of the pivot Schur
    complements (dense eigenvalue factorization, deterministic), so R is
    reproducible bit for bit on a platform.
    """
    if M.structure != SPD:
        raise ConfigurationError("block_cholesky expects an SPD-tagged matrix")
    n, m = M.n, M.m
    R = np.zeros_like(M.data)
    for i in range(n):
        ri, rj = i * m, (i + 1) * m
        top = R[:ri, ri:rj]                       # column block i above pivot
        pivot = M.data[ri:rj, ri:rj] - top.T @ top
        Rii = _spd_sqrt(pivot)
        R[ri:rj, ri:rj] = Rii
        if i + 1 < n:
            rhs = M.data[ri:rj, rj:] - top.T @ R[:ri, rj:]
            R[ri:rj, rj:] = np.linalg.solve(Rii, rhs)
    return BlockMatrix(data=R, n=n, m=m, structure=BLOCK_UPPER)


def solve_upper_left(R: BlockMatrix, B: np.ndarray) -> np.ndarray:
    """X with R^T X = B by forward block substitution (R block upper)."""
    n, m = R.n, R.m
    X = np.array(B, dtype=float, copy=True)
    if X.ndim == 1:
        X = X[:, None]
    for i in range(n):
        ri, rj = i * m, (i + 1) * m
        if i:
            X[ri:rj] -= R.data[:ri, ri:rj].T @ X[:ri]
        X[ri:rj] = np.linalg.solve(R.data[ri:rj, ri:rj], X[ri:rj])
    return X if np.ndim(B) > 1 else X[:, 0]


def solve_upper(R: BlockMatrix, B: np.ndarray) -> np.ndarray:
    """X with R X = B by backward block substitution."""
    n, m = R.n, R.m
    X = np.array(B, dtype=float, copy=True)
    if X.ndim == 1:
        X = X[:, None]
    for i in range(n - 1, -1, -1):
        ri, rj = i * m, (i + 1) * m
        if i + 1 < n:
            X[ri:rj] -= R.data[ri:rj, rj:] @ X[rj:]
        X[ri:rj] = np.linalg.solve(R.data[ri:rj, ri:rj], X[ri:rj])
    return X if np.ndim(B) > 1 else X[:, 0]


def rom_propagator(R: BlockMatrix, S: BlockMatrix) -> BlockMatrix:
    """Galerkin projection R^{-T} S R^{-1} by two block substitutions."""
    if R.structure != BLOCK_UPPER:
        raise ConfigurationError("rom_propagator expects a Cholesky factor")
    Y = solve_upper_left(R, S.data)
    P = solve_upper_left(R, Y.T).T
    return BlockMatrix(data=P, n=R.n, m=R.m, structure=GENERAL)


def add_noise(records, noise_fraction: float, seed: int):
    """Additive white Gaussian noise on every measured data sample.

    The standard deviation is noise_fraction times the largest absolute
    sampled trace value over all shots, receivers and sample times j*tau,
    j = 0..2n-1.  Only those measured samples are perturbed; the negative
    time window is computed, not measured, and stays clean.  Deterministic
    per seed.
    """
    if noise_fraction < 0:
        raise ConfigurationError("noise fraction must be non-negative")
    if noise_fraction == 0:
        return list(records)
    rng = np.random.default_rng(seed)
    rows = {}
    peak = 0.0
    for rec in records:
        ks = rec.tau_steps
        idx = np.arange(2 * rec.n) * ks - rec.k_start
        rows[rec.source_index] = idx
        peak = max(peak, float(np.max(np.abs(rec.traces[idx]))))
    sigma = noise_fraction * peak
    out = []
    for rec in records:
        traces = rec.traces.copy()
        idx = rows[rec.source_index]
        traces[idx] += sigma * rng.standard_normal((len(idx), rec.m))
        out.append(replace(rec, traces=traces))
    return out


def add_noise_tensor(data: DataTensor, noise_fraction: float, seed: int) -> DataTensor:
    """Noise applied directly to an assembled data tensor (same model)."""
    if noise_fraction < 0:
        raise ConfigurationError("noise fraction must be non-negative")
    if noise_fraction == 0:
        return data
    rng = np.random.default_rng(seed)
    sigma = noise_fraction * float(np.max(np.abs(data.D)))
    return DataTensor(D=data.D + sigma * rng.standard_normal(data.D.shape),
                      tau=data.tau, n=data.n, m=data.m)
