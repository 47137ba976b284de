"""Physical model of a pinching-antenna system.

Geometry, effective channels, SINR and the two-phase average power. Every
optimizer in the package evaluates its final design through these functions.

Conventions
-----------
* Waveguide ``m`` runs parallel to the x-axis at height ``h`` and lateral
  offset ``y[m]``; its feed point sits at ``x = 0``.
* Antenna arrays are shaped ``(M, N)``; flattened vectors use the row-major
  index ``m * N + n``.
* The effective channel uses the positive-exponent form
  ``beta * exp(+j*2*pi/lambda_c * (r + n_eff * x)) / r``. SINR is invariant
  to conjugating all channels and beamformers, so the sign is immaterial.
* Powers are in watts. dBm appears only at I/O boundaries.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


def watts_to_dbm(p):
    return 10.0 * np.log10(np.asarray(p, dtype=float) * 1e3)


def dbm_to_watts(p_dbm):
    return 10.0 ** (np.asarray(p_dbm, dtype=float) / 10.0) * 1e-3


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


@dataclass(frozen=True)
class SystemGeometry:
    M: int
    N: int
    K: int
    D: float
    h: float
    y: tuple
    f_c: float = 28e9
    n_eff: float = 1.4
    delta_min: float | None = None  # None -> half a free-space wavelength
    feed_x: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))
        if self.delta_min is None:
            object.__setattr__(self, "delta_min", self.lambda_c / 2)
        if min(self.M, self.N, self.K) < 1:
            raise ValueError("M, N and K must all be >= 1")
        if len(self.y) != self.M:
            raise ValueError(f"expected {self.M} waveguide y-coordinates, got {len(self.y)}")
        if self.D <= 0 or self.h <= 0 or self.f_c <= 0 or self.n_eff <= 0:
            raise ValueError("D, h, f_c and n_eff must be positive")
        if self.delta_min < 0:
            raise ValueError("delta_min must be non-negative")
        if (self.N - 1) * self.delta_min > self.D:
            raise ValueError("waveguide too short to host N antennas at delta_min spacing")
        if self.feed_x != 0.0:
            raise ValueError("feed point is fixed at x = 0")

    @property
    def lambda_c(self) -> float:
        return SPEED_OF_LIGHT / self.f_c

    @property
    def lambda_g(self) -> float:
        return self.lambda_c / self.n_eff

    @property
    def beta(self) -> float:
        return self.lambda_c / (4 * np.pi)

    @property
    def wavenumber(self) -> float:
        return 2 * np.pi / self.lambda_c


@dataclass(frozen=True, eq=False)
class MotionModel:
    P_motor: float
    v: float
    T1: float
    T2: float
    X_init: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "X_init", np.array(self.X_init, dtype=float, ndmin=2))
        if self.P_motor < 0:
            raise ValueError("motor power must be non-negative")
        if self.v <= 0:
            raise ValueError("movement speed must be positive")
        if self.T1 <= 0 or self.T2 <= 0:
            raise ValueError("phase durations must be positive")

    @property
    def max_move(self) -> float:
        return self.v * self.T1

    @property
    def frame(self) -> float:
        return self.T1 + self.T2

    @property
    def motion_weight(self) -> float:
        """Average-power cost per metre of displacement, P / ((T1 + T2) v)."""
        return self.P_motor / (self.frame * self.v)

    @property
    def transmit_weight(self) -> float:
        return self.T2 / self.frame


@dataclass(frozen=True, eq=False)
class UserSet:
    positions: np.ndarray  # (K, 2) ground coordinates
    sigma2: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float, ndmin=2)
        if pos.shape[1] == 3:
            pos = pos[:, :2]
        K = pos.shape[0]
        sigma2 = np.broadcast_to(np.asarray(self.sigma2, dtype=float), (K,)).copy()
        gamma = np.broadcast_to(np.asarray(self.gamma, dtype=float), (K,)).copy()
        if np.any(sigma2 <= 0) or np.any(gamma <= 0):
            raise ValueError("noise powers and SINR targets must be positive")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "sigma2", sigma2)
        object.__setattr__(self, "gamma", gamma)

    @property
    def K(self) -> int:
        return self.positions.shape[0]


@dataclass(eq=False)
class AntennaState:
    X: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        self.X = np.array(self.X, dtype=float, ndmin=2)
        self.alpha = np.array(self.alpha, dtype=float, ndmin=2)


def reachable_interval(geom: SystemGeometry, motion: MotionModel):
    """Per-antenna [lo, hi] bounds from C4 (waveguide) and C5 (movement range)."""
    lo = np.maximum(0.0, motion.X_init - motion.max_move)
    hi = np.minimum(geom.D, motion.X_init + motion.max_move)
    return lo, hi


def check_positions(geom: SystemGeometry, X, tol: float = 0.0):
    X = np.asarray(X, dtype=float)
    if X.shape != (geom.M, geom.N):
        raise ValueError(f"positions must have shape {(geom.M, geom.N)}, got {X.shape}")
    if np.any(X < -tol) or np.any(X > geom.D + tol):
        raise ValueError("antenna positions outside [0, D]")
    if geom.N > 1 and np.any(np.diff(X, axis=1) < geom.delta_min - tol):
        raise ValueError("adjacent antennas closer than delta_min")


def check_motion(geom: SystemGeometry, motion: MotionModel):
    check_positions(geom, motion.X_init)


def distances(geom: SystemGeometry, X, user_xy) -> np.ndarray:
    """Antenna-to-user distances, shape (K, M, N)."""
    X = np.asarray(X, dtype=float)
    pts = np.atleast_2d(np.asarray(user_xy, dtype=float))[:, :2]
    dx = X[None, :, :] - pts[:, 0, None, None]
    dy = np.asarray(geom.y)[None, :, None] - pts[:, 1, None, None]
    return np.sqrt(dx**2 + dy**2 + geom.h**2)


def phases(geom: SystemGeometry, X, user_xy) -> np.ndarray:
    """phi[k, m, n] = 2*pi/lambda_c * (r + n_eff * x), shape (K, M, N)."""
    r = distances(geom, X, user_xy)
    return geom.wavenumber * (r + geom.n_eff * np.asarray(X, dtype=float)[None])


def effective_channel(geom: SystemGeometry, X, user_xy) -> np.ndarray:
    """Combined in-waveguide and free-space channel of one user, length M*N."""
    return effective_channels(geom, X, np.atleast_2d(user_xy))[0]


def effective_channels(geom: SystemGeometry, X, user_xy) -> np.ndarray:
    """Effective channels t_k = G^H h_k for every user, shape (K, M*N)."""
    r = distances(geom, X, user_xy)
    phi = geom.wavenumber * (r + geom.n_eff * np.asarray(X, dtype=float)[None])
    t = geom.beta * np.exp(1j * phi) / r
    return t.reshape(t.shape[0], -1)


def radiation_matrix(alpha) -> np.ndarray:
    """Block-diagonal (M*N, M) matrix A with alpha_m in column m."""
    alpha = np.asarray(alpha, dtype=float)
    M, N = alpha.shape
    A = np.zeros((M * N, M))
    for m in range(M):
        A[m * N:(m + 1) * N, m] = alpha[m]
    return A


def beam_gains(channels, A, W) -> np.ndarray:
    """G[k, j] = t_k^H A w_j, the amplitude of beam j at user k."""
    return np.conj(channels) @ A @ W


def sinr(channels, A, W, sigma2) -> np.ndarray:
    G = np.abs(beam_gains(channels, A, np.asarray(W))) ** 2
    signal = np.diag(G)
    interference = G.sum(axis=1) - signal
    return signal / (interference + np.asarray(sigma2, dtype=float))


def motion_energy(x, x_init, motion: MotionModel):
    """Energy in joules spent moving an antenna from x_init to x."""
    return motion.P_motor * np.abs(np.asarray(x, dtype=float) - x_init) / motion.v


def transmit_power(W) -> float:
    return float(np.sum(np.abs(W) ** 2))


def average_power(W, X, motion: MotionModel) -> float:
    e = motion_energy(X, motion.X_init, motion).sum()
    return motion.transmit_weight * transmit_power(W) + float(e) / motion.frame


@dataclass
class FeasibilityReport:
    """Worst-case violation of each constraint of the design problem.

    SINR shortfall is relative, ``max(0, 1 - gamma_k / Gamma_k)``; the
    geometric entries are in metres; radiation excess is ``||alpha_m||^2 - 1``.
    """
    sinr: np.ndarray
    sinr_shortfall: float
    radiation_excess: float
    spacing_deficit: float
    range_excess: float
    movement_excess: float
    tol: float = 1e-6
    extras: dict = field(default_factory=dict)

    @property
    def worst(self) -> float:
        return max(self.sinr_shortfall, self.radiation_excess, self.spacing_deficit,
                   self.range_excess, self.movement_excess)

    @property
    def feasible(self) -> bool:
        return self.worst <= self.tol

    def as_dict(self) -> dict:
        return {
            "sinr_shortfall": self.sinr_shortfall,
            "radiation_excess": self.radiation_excess,
            "spacing_deficit": self.spacing_deficit,
            "range_excess": self.range_excess,
            "movement_excess": self.movement_excess,
            "feasible": self.feasible,
        }


def audit_feasibility(state: AntennaState, W, users: UserSet, geom: SystemGeometry,
                      motion: MotionModel, tol: float = 1e-6) -> FeasibilityReport:
    X, alpha = state.X, state.alpha
    channels = effective_channels(geom, X, users.positions)
    gam = sinr(channels, radiation_matrix(alpha), W, users.sigma2)
    shortfall = float(np.max(np.maximum(0.0, 1.0 - gam / users.gamma)))
    radiation = float(max(0.0, np.max(np.sum(alpha**2, axis=1) - 1.0)))
    if np.any(alpha < 0):
        radiation = max(radiation, float(-alpha.min()))
    spacing = 0.0
    if geom.N > 1:
        spacing = float(max(0.0, np.max(geom.delta_min - np.diff(X, axis=1))))
    rng = float(max(0.0, np.max(-X), np.max(X - geom.D)))
    move = float(max(0.0, np.max(np.abs(X - motion.X_init) - motion.max_move)))
    return FeasibilityReport(gam, shortfall, radiation, spacing, rng, move, tol)


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything a solver needs: the static world, the motion budget, the users."""
    geom: SystemGeometry
    motion: MotionModel
    users: UserSet

    def __post_init__(self):
        if self.users.K != self.geom.K:
            raise ValueError(f"geometry declares K={self.geom.K} users, got {self.users.K}")
        if self.motion.X_init.shape != (self.geom.M, self.geom.N):
            raise ValueError("initial positions must have shape (M, N)")
        check_motion(self.geom, self.motion)

    def channels(self, X) -> np.ndarray:
        return effective_channels(self.geom, X, self.users.positions)

    def audit(self, X, alpha, W, tol: float = 1e-6) -> FeasibilityReport:
        return audit_feasibility(AntennaState(X, alpha), W, self.users, self.geom, self.motion, tol)
