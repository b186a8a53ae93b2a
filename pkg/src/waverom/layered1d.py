"""One-dimensional layered media in travel-time coordinates, and waveguide modes.

In travel time T the variable-speed 1D acoustic equation becomes

    P_tt = zeta(T) d/dT [ zeta(T)^{-1} dP/dT ],

with unit propagation speed and scattering carried entirely by the
piecewise-constant impedance zeta.  The accessible boundary T = 0 is sound
hard, the far end sound soft.  For a single interface at depth T0 the
solution is an explicit image series: a train of echoes delayed by full
round trips 2 q T0, weighted by powers of the reflection coefficient.
When every round-trip time is an integer number of sampling intervals the
echo train realigns with the reference (homogeneous) snapshots, which is
the mechanism that lets reference snapshots span the true ones.

The waveguide utilities tabulate the transverse modes sin(pi j x / D), their
wavenumbers and group speeds, and the aperture coupling matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .medium import ConfigurationError


@dataclass(frozen=True)
class LayeredMedium:
    """Piecewise-constant impedance over travel-time depth.

    impedances[j] holds on (T_{j-1}, T_j]; len(impedances) = len(interfaces) + 1.
    """

    impedances: tuple
    interfaces: tuple
    depth: float

    def __post_init__(self):
        if len(self.impedances) != len(self.interfaces) + 1:
            raise ConfigurationError("need one more impedance than interfaces")
        if any(z <= 0 for z in self.impedances):
            raise ConfigurationError("impedances must be positive")
        ts = list(self.interfaces)
        if ts != sorted(ts) or len(set(ts)) != len(ts):
            raise ConfigurationError("interface travel times must increase")
        if ts and not (0 < ts[0] and ts[-1] < self.depth):
            raise ConfigurationError("interfaces must lie inside (0, depth)")

    @property
    def layers(self):
        return len(self.interfaces)

    def impedance_profile(self, T):
        T = np.asarray(T)
        z = np.full(T.shape, float(self.impedances[-1]))
        bounds = (0.0,) + tuple(self.interfaces)
        for j in range(len(self.interfaces)):
            z[(T > bounds[j] - 1e-15) & (T <= self.interfaces[j])] = self.impedances[j]
        z[T <= 0] = self.impedances[0]
        return z


def travel_time_map(z_grid, c_profile):
    """T(z) = integral dz'/c(z'), trapezoid on the given range grid."""
    z_grid = np.asarray(z_grid, float)
    c = np.asarray(c_profile, float)
    if np.any(c <= 0):
        raise ConfigurationError("wave speed must be positive")
    slowness = 1.0 / c
    T = np.concatenate([[0.0], np.cumsum(
        0.5 * (slowness[1:] + slowness[:-1]) * np.diff(z_grid))])
    return T


def reflection_transmission(zeta_a: float, zeta_b: float):
    """Interface coefficients; satisfies R^2 + T^2 = 1."""
    if zeta_a <= 0 or zeta_b <= 0:
        raise ConfigurationError("impedances must be positive")
    refl = (zeta_a - zeta_b) / (zeta_a + zeta_b)
    trans = 2.0 * np.sqrt(zeta_a * zeta_b) / (zeta_a + zeta_b)
    return refl, trans


def dalembert(profile, t, T):
    """Reference snapshot 0.5 [phi(T - t) + phi(T + t)] (even initial data)."""
    T = np.asarray(T, float)
    return 0.5 * (profile(T - t) + profile(T + t))


def single_layer_series(medium: LayeredMedium, profile, t, T,
                        q_max: int | None = None):
    """Exact single-interface snapshot from the round-trip image series."""
    if medium.layers != 1:
        raise ConfigurationError("series solution covers one interface only")
    T = np.asarray(T, float)
    T0 = medium.interfaces[0]
    z0, z1 = medium.impedances
    refl, trans = reflection_transmission(z0, z1)
    if q_max is None:
        if abs(refl) < 1e-15:
            q_max = int(np.ceil(t / (2 * T0))) + 2
        else:
            q_max = max(int(np.ceil(np.log(1e-14) / np.log(abs(refl)))),
                        int(np.ceil(t / (2 * T0))) + 2)
    near = np.zeros_like(T)
    far = np.zeros_like(T)
    for q in range(q_max):
        delay = t - 2 * q * T0
        near += (-refl) ** q * dalembert(profile, delay, T)
        far += (-refl) ** q * 0.5 * profile(T - delay)
    far *= trans * np.sqrt(z1 / z0)
    return np.where(T < T0, near, far)


def fd_solve_snapshots(medium: LayeredMedium, profile, times, dT: float,
                       cfl: float = 0.9):
    """Variable-impedance 1D leapfrog; snapshots at the requested times.

    Flux-form staggered stencil, Neumann at T = 0, Dirichlet at depth.
    Initial state P(0, T) = profile(T) with zero velocity.
    """
    nT = int(round(medium.depth / dT)) + 1
    T = np.arange(nT) * dT
    zeta_half = medium.impedance_profile(0.5 * (T[1:] + T[:-1]))
    zeta = medium.impedance_profile(T)
    # Gershgorin stability bound of the variable-impedance stencil
    inv = 1.0 / zeta_half
    diag = np.empty(nT)
    diag[1:-1] = zeta[1:-1] * (inv[:-1] + inv[1:])
    diag[0] = 2.0 * zeta[0] * inv[0]
    diag[-1] = zeta[-1] * inv[-1]
    dt_stab = dT * np.sqrt(2.0 / np.max(diag))
    times = np.asarray(times, float)
    t_max = float(times.max())
    k_last = max(int(np.ceil(t_max / (dt_stab * cfl))), 1)
    dt = t_max / k_last if t_max > 0 else dt_stab * cfl
    k_of = np.round(times / dt).astype(int)  # requested times, nearest step

    def rhs(P):
        flux = (P[1:] - P[:-1]) / dT / zeta_half
        div = np.zeros_like(P)
        div[1:-1] = (flux[1:] - flux[:-1]) / dT
        div[0] = 2.0 * flux[0] / dT    # mirror ghost: even across the hard wall
        div[-1] = 0.0
        out = zeta * div
        out[-1] = 0.0                  # pinned sound-soft end
        return out

    P = profile(T).astype(float)
    P[-1] = 0.0
    P_prev = P + 0.5 * dt**2 * rhs(P)  # zero-velocity start
    out = {}
    if 0 in k_of:
        out[0] = P.copy()
    k_set = set(int(k) for k in k_of)
    for k in range(1, max(k_set) + 1):
        P_next = 2 * P - P_prev + dt**2 * rhs(P)
        P_prev, P = P, P_next
        if k in k_set:
            out[k] = P.copy()
    snaps = np.stack([out[int(k)] for k in k_of])
    return T, snaps


def span_residual(medium: LayeredMedium, profile, tau: float, n: int, j: int,
                  dT: float = 0.01, T_pad: float = 8.0,
                  use_fd: bool | None = None):
    """Relative L2 residual of P(j tau) projected on span{P_o(j' tau), j' <= j}.

    The true snapshot comes from the exact image series for a single
    interface and from the 1D solver otherwise.  A rank-deficient span is
    projected through the SVD (least squares), which is also what keeps the
    heavily overlapping reference snapshots well posed.
    """
    if not (0 <= j < n):
        raise ConfigurationError("snapshot index out of range")
    Tmax = min(medium.depth, max(j * tau + T_pad,
                                 (2 * medium.interfaces[0] if medium.interfaces
                                  else 0.0) + T_pad))
    T = np.arange(0.0, Tmax, dT)
    if use_fd is None:
        use_fd = medium.layers > 1
    if medium.layers == 0:
        b = dalembert(profile, j * tau, T)
    elif not use_fd:
        b = single_layer_series(medium, profile, j * tau, T)
    else:
        grid, snaps = fd_solve_snapshots(medium, profile, [j * tau], dT)
        b = np.interp(T, grid, snaps[0])
    A = np.stack([dalembert(profile, jp * tau, T) for jp in range(j + 1)], axis=1)
    coef, *_ = np.linalg.lstsq(A, b, rcond=None)
    resid = b - A @ coef
    return float(np.linalg.norm(resid) / np.linalg.norm(b))


# ---------------------------------------------------------------------------
# Waveguide modes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WaveguideModes:
    D: float
    omega_c: float
    c0: float
    N: int
    alpha: np.ndarray
    beta: np.ndarray
    group_speed: np.ndarray


def mode_table(D: float, omega_c: float, c0: float = 1.0) -> WaveguideModes:
    """Propagating transverse modes of a sound-soft-walled waveguide."""
    if D <= 0:
        raise ConfigurationError("waveguide width must be positive")
    k_c = omega_c / c0
    N = int(np.floor(k_c * D / np.pi))
    if N == 0:
        raise ConfigurationError("waveguide below cutoff: no propagating modes")
    j = np.arange(1, N + 1)
    alpha = np.pi * j / D
    beta = np.sqrt(np.maximum(k_c**2 - alpha**2, 0.0))
    group = c0 * beta / k_c
    return WaveguideModes(D=D, omega_c=omega_c, c0=c0, N=N,
                          alpha=alpha, beta=beta, group_speed=group)


def mode_shape(D: float, j: int, x):
    return np.sqrt(2.0 / D) * np.sin(np.pi * j * np.asarray(x) / D)


def mode_coupling(D: float, aperture, N: int) -> np.ndarray:
    """Q_jl = integral over the aperture of psi_j psi_l (closed form)."""
    a, b = aperture
    if not (0.0 - 1e-12 <= a < b <= D + 1e-12):
        raise ConfigurationError("aperture must be a subinterval of (0, D)")

    def anti(j, l, x):
        # antiderivative of (2/D) sin(pi j x/D) sin(pi l x/D)
        if j == l:
            return x / D - np.sin(2 * np.pi * j * x / D) / (2 * np.pi * j)
        jm, jp = np.pi * (j - l) / D, np.pi * (j + l) / D
        return (np.sin(jm * x) / jm - np.sin(jp * x) / jp) / D

    Q = np.empty((N, N))
    for j in range(1, N + 1):
        for l in range(j, N + 1):
            v = anti(j, l, b) - anti(j, l, a)
            Q[j - 1, l - 1] = Q[l - 1, j - 1] = v
    return Q
