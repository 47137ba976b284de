"""Continuous antenna movement by ADMM over a split channel model.

The channel of PA (m, n) seen by user k is carried by two proxies: a phase
``theta[k,m,n]`` standing in for ``phi = 2pi/lambda_c (r + n_eff x)`` and a
complex vector ``t_k`` with ``r t_k = beta exp(j theta)`` elementwise. The
loop updates W, t, alpha, theta and X in turn, then the multipliers, then
grows the penalties.

Shapes: theta, mu are (K, M, N); t, lam are (K, M*N) complex.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import cvxpy as cp
import numpy as np

from .beamforming import min_power_beamformer
from .conic import Status, solve_model
from .model import (Scenario, average_power, distances, phases,
                    radiation_matrix, reachable_interval, sinr, transmit_power)
from .radiation import update_radiation
from .report import IterRecord, SolveReport


@dataclass
class AdmmSettings:
    rho1_init: float = 1e3
    rho2_init: float = 1e5
    epsilon: float = 1.25
    rho_max: float = 1e9
    varsigma1: float = 1e-4
    varsigma2: float = 1e-4
    max_iter: int = 200
    solver_tol: float = 1e-8
    optimize_alpha: bool = True
    motion_cost: bool = True     # False: drop the motion term from every subproblem
    polish: bool = True          # final W re-solve against the true channels

    def __post_init__(self):
        if self.epsilon < 1:
            raise ValueError("epsilon must be >= 1")
        if min(self.rho1_init, self.rho2_init) <= 0 or self.rho_max <= 0:
            raise ValueError("penalties must be positive")
        if min(self.varsigma1, self.varsigma2, self.solver_tol) <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class AdmmState:
    W: np.ndarray
    X: np.ndarray
    alpha: np.ndarray
    theta: np.ndarray
    t: np.ndarray
    mu: np.ndarray
    lam: np.ndarray
    rho1: float
    rho2: float
    iter: int = 0
    t_fallbacks: int = field(default=0)

    def copy(self) -> "AdmmState":
        return replace(self, **{k: np.array(getattr(self, k)) for k in
                                ("W", "X", "alpha", "theta", "t", "mu", "lam")})


def init_state(sc: Scenario, settings: AdmmSettings, X=None, alpha=None) -> AdmmState:
    """Start from the given (default: initial) positions with consistent proxies."""
    g = sc.geom
    X = np.array(sc.motion.X_init if X is None else X, dtype=float)
    lo, hi = reachable_interval(g, sc.motion)
    if np.any(X < lo - 1e-12) or np.any(X > hi + 1e-12):
        raise ValueError("starting positions outside the reachable interval")
    if g.N > 1 and np.any(np.diff(X, axis=1) < g.delta_min - 1e-12):
        raise ValueError("starting positions violate the minimum spacing")
    if alpha is None:
        alpha = np.full((g.M, g.N), 1 / np.sqrt(g.N))
    K, MN = g.K, g.M * g.N
    return AdmmState(
        W=np.zeros((g.M, K), dtype=complex), X=X, alpha=np.array(alpha, dtype=float),
        theta=phases(g, X, sc.users.positions), t=sc.channels(X),
        mu=np.zeros((K, g.M, g.N)), lam=np.zeros((K, MN), dtype=complex),
        rho1=settings.rho1_init, rho2=settings.rho2_init)


def split_residuals(sc: Scenario, st: AdmmState):
    """(theta - phi, R t - u) at the current positions."""
    g = sc.geom
    r = distances(g, st.X, sc.users.positions).reshape(g.K, -1)
    d_phase = st.theta - phases(g, st.X, sc.users.positions)
    d_chan = r * st.t - g.beta * np.exp(1j * st.theta.reshape(g.K, -1))
    return d_phase, d_chan


def residual(sc: Scenario, st: AdmmState) -> float:
    dp, dc = split_residuals(sc, st)
    return float(np.sum(dp**2) + np.sum(np.abs(dc) ** 2))


def augmented_lagrangian(sc: Scenario, st: AdmmState, motion_cost: bool = True) -> float:
    dp, dc = split_residuals(sc, st)
    f = sc.motion.transmit_weight * transmit_power(st.W)
    if motion_cost:
        f += sc.motion.motion_weight * float(np.abs(st.X - sc.motion.X_init).sum())
    return float(f + st.rho1 / 2 * np.sum((dp + st.mu / st.rho1) ** 2)
                 + st.rho2 / 2 * np.sum(np.abs(dc + st.lam / st.rho2) ** 2)
                 - np.sum(st.mu**2) / (2 * st.rho1) - np.sum(np.abs(st.lam) ** 2) / (2 * st.rho2))


def proxy_sinr(sc: Scenario, st: AdmmState) -> np.ndarray:
    return sinr(st.t, radiation_matrix(st.alpha), st.W, sc.users.sigma2)


# ---------------------------------------------------------------- W block

def update_beamformer(sc: Scenario, st: AdmmState, settings: AdmmSettings):
    """Minimum-power W for the proxy channels; (None, status) if unattainable."""
    G = st.t @ radiation_matrix(st.alpha)
    return min_power_beamformer(G, sc.users.sigma2, sc.users.gamma, tol=settings.solver_tol)


# ---------------------------------------------------------------- t block

def _project_quadratic(v, Bt, ct, d, iters: int = 200):
    """argmin ||y - v||^2 s.t. y^H Bt y - 2 Re(ct^H y) + d <= 0 (Bt Hermitian PSD).

    Stationarity gives (I + nu Bt) y = v + nu ct; the constraint value is
    non-increasing in nu, so nu is found by bisection in log scale. Returns
    None if no nu makes the point feasible.
    """
    e, U = np.linalg.eigh(Bt)
    e = np.maximum(e, 0.0)
    vp, cq = U.conj().T @ v, U.conj().T @ ct

    def point(nu):
        return (vp + nu * cq) / (1 + nu * e)

    def value(yp):
        return float(np.sum(e * np.abs(yp) ** 2) - 2 * np.real(np.vdot(cq, yp)) + d)

    if value(vp) <= 0:
        return v.copy()
    lo, hi = 0.0, 1.0 / max(e.max(initial=0.0), np.linalg.norm(cq), 1e-300)
    for _ in range(400):
        if value(point(hi)) <= 0:
            break
        lo, hi = hi, hi * 4
    else:
        return None
    for _ in range(iters):
        mid = np.sqrt(lo * hi) if lo > 0 else hi / 2
        if value(point(mid)) <= 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * hi:
            break
    return U @ point(hi)


def sinr_linearization(a, t_prev, k, gamma_k, sigma2_k):
    """Quadratic form (B, c, d) of the tangent-restricted SINR constraint of user k.

    ``a`` holds the columns A w_j. The constraint reads
    t^H B t - 2 Re(c^H t) + d <= 0 and is tangent to the true one at t_prev.
    """
    others = np.delete(a, k, axis=1)
    B = gamma_k * others @ others.conj().T
    ak = a[:, k]
    s0 = np.vdot(ak, t_prev)           # a_k^H t_prev
    c = ak * s0
    d = abs(s0) ** 2 + sigma2_k * gamma_k
    return B, c, d


def update_t(sc: Scenario, st: AdmmState):
    """Per-user projection onto the linearized SINR set; returns (t, fallbacks)."""
    g = sc.geom
    a = radiation_matrix(st.alpha) @ st.W
    r = distances(g, st.X, sc.users.positions).reshape(g.K, -1)
    target = g.beta * np.exp(1j * st.theta.reshape(g.K, -1)) - st.lam / st.rho2
    t_new = st.t.copy()
    fallbacks = 0
    for k in range(g.K):
        scale = sc.users.sigma2[k] * sc.users.gamma[k]
        B, c, d = sinr_linearization(a, st.t[k], k, sc.users.gamma[k], sc.users.sigma2[k])
        Dinv = 1.0 / r[k]
        # y = r * t, normalized so the constraint data is O(1)
        Bt = (Dinv[:, None] * B * Dinv[None, :]) / scale
        y = _project_quadratic(target[k], Bt, Dinv * c / scale, d / scale)
        if y is None:
            fallbacks += 1
            continue
        t_new[k] = y / r[k]
    return t_new, fallbacks


# ---------------------------------------------------------------- alpha block

def update_alpha(sc: Scenario, st: AdmmState, settings: AdmmSettings):
    alpha, _, _ = update_radiation(st.t, st.alpha, st.W, sc.users.sigma2, sc.users.gamma,
                                   tol=settings.solver_tol)
    return alpha


# ---------------------------------------------------------------- theta block

def lipschitz_constant(r, t, lam, rho2, beta):
    """Gradient Lipschitz constant 2 beta |r t + lam/rho2| of the phase penalty."""
    return 2 * beta * np.abs(r * t + lam / rho2)


def phase_penalty(theta, r, t, lam, rho2, beta):
    """v(theta) = |r t - beta exp(j theta) + lam/rho2|^2, elementwise."""
    return np.abs(r * t - beta * np.exp(1j * theta) + lam / rho2) ** 2


def phase_penalty_grad(theta, r, t, lam, rho2, beta):
    c = r * t + lam / rho2
    return 2 * beta * np.abs(c) * np.sin(theta - np.angle(c))


def theta_surrogate(theta, theta_prev, phi, mu, rho1, rho2, r, t, lam, beta):
    """Quadratic majorizer of the theta subproblem, summed over entries."""
    L = lipschitz_constant(r, t, lam, rho2, beta)
    v0 = phase_penalty(theta_prev, r, t, lam, rho2, beta)
    g0 = phase_penalty_grad(theta_prev, r, t, lam, rho2, beta)
    d = theta - theta_prev
    return float(np.sum(rho1 / 2 * (theta - phi + mu / rho1) ** 2
                        + rho2 / 2 * (v0 + g0 * d + L / 2 * d**2)))


def theta_objective(theta, phi, mu, rho1, rho2, r, t, lam, beta):
    return float(np.sum(rho1 / 2 * (theta - phi + mu / rho1) ** 2
                        + rho2 / 2 * phase_penalty(theta, r, t, lam, rho2, beta)))


def theta_step(theta_prev, phi, mu, rho1, rho2, r, t, lam, beta):
    """Closed-form minimizer of the quadratic majorizer."""
    L = lipschitz_constant(r, t, lam, rho2, beta)
    grad = phase_penalty_grad(theta_prev, r, t, lam, rho2, beta)
    return (2 * rho1 * (phi - mu / rho1) + rho2 * L * theta_prev - rho2 * grad) / (2 * rho1 + rho2 * L)


def update_theta(sc: Scenario, st: AdmmState):
    g = sc.geom
    shape = st.theta.shape
    r = distances(g, st.X, sc.users.positions)
    phi = phases(g, st.X, sc.users.positions)
    return theta_step(st.theta, phi, st.mu, st.rho1, st.rho2, r,
                      st.t.reshape(shape), st.lam.reshape(shape), g.beta)


# ---------------------------------------------------------------- X block

@dataclass
class PositionSurrogate:
    """Per-PA convex majorizer of the position subproblem, in offsets from X_prev.

    Everything is expressed through the displacement ``delta`` so that the
    large absolute phases never enter a subtraction.
    """
    x_prev: np.ndarray      # (M, N)
    x_home: np.ndarray      # (M, N)
    dx0: np.ndarray         # (K, M, N) x_prev - user x
    rr0: np.ndarray         # (K, M, N) r at x_prev
    gap0: np.ndarray        # (K, M, N) phi(x_prev) - (theta + mu/rho1)
    t_abs: np.ndarray
    c_abs: np.ndarray
    cos_v: np.ndarray
    kappa: float
    n_eff: float
    rho1: float
    rho2: float
    w_motion: float

    def _dr(self, d):
        # r(x_prev + d) - r(x_prev) without cancellation
        rn = np.sqrt(self.rr0**2 + d * (2 * self.dx0 + d))
        return d * (2 * self.dx0 + d) / (rn + self.rr0), rn

    def _parts(self, d):
        d = np.broadcast_to(d, self.x_prev.shape)[None]
        dr, rn = self._dr(d)
        slope0 = self.dx0 / self.rr0
        A = self.gap0 + self.kappa * (dr + self.n_eff * d)          # phi - target
        B = -self.gap0 - self.kappa * (slope0 * d + self.n_eff * d)  # target - phi_lin
        xi = np.maximum(0.0, np.maximum(A, B))
        convex = self.cos_v >= 0
        r_term = np.where(convex, self.rr0 + dr, self.rr0 + slope0 * d)
        eta_var = self.t_abs**2 * rn**2 + 2 * self.c_abs * self.t_abs * self.cos_v * r_term
        return d, dr, rn, slope0, A, B, xi, convex, eta_var

    def value(self, d) -> np.ndarray:
        """Surrogate per PA, up to the d-independent |c|^2 terms."""
        d, _, _, _, _, _, xi, _, eta_var = self._parts(d)
        mot = self.w_motion * np.abs(self.x_prev + d[0] - self.x_home)
        return mot + np.sum(self.rho1 / 2 * xi**2 + self.rho2 / 2 * eta_var, axis=0)

    def right_derivative(self, d) -> np.ndarray:
        d, _, rn, slope0, A, B, xi, convex, _ = self._parts(d)
        dA = self.kappa * ((self.dx0 + d) / rn + self.n_eff)
        dB = -self.kappa * (slope0 + self.n_eff)
        dxi = np.where(A > B, dA, np.where(B > A, dB, np.maximum(dA, dB)))
        dxi = np.where(xi > 0, dxi, 0.0)
        dr = np.where(convex, (self.dx0 + d) / rn, slope0)
        deta = self.t_abs**2 * 2 * (self.dx0 + d) + 2 * self.c_abs * self.t_abs * self.cos_v * dr
        home = self.x_prev + d[0] - self.x_home
        mot = self.w_motion * np.where(home >= 0, 1.0, -1.0)
        return mot + np.sum(self.rho1 * xi * dxi + self.rho2 / 2 * deta, axis=0)


def position_surrogate(sc: Scenario, st: AdmmState, motion_cost: bool = True) -> PositionSurrogate:
    g = sc.geom
    shape = st.theta.shape
    users = sc.users.positions
    dx0 = st.X[None] - users[:, 0, None, None]
    rr0 = distances(g, st.X, users)
    target = st.theta + st.mu / st.rho1
    gap0 = phases(g, st.X, users) - target
    t = st.t.reshape(shape)
    cvec = st.lam.reshape(shape) / st.rho2 - g.beta * np.exp(1j * st.theta)
    cos_v = np.cos(np.angle(t) - np.angle(cvec))
    return PositionSurrogate(
        x_prev=st.X.copy(), x_home=sc.motion.X_init, dx0=dx0, rr0=rr0, gap0=gap0,
        t_abs=np.abs(t), c_abs=np.abs(cvec), cos_v=cos_v, kappa=g.wavenumber,
        n_eff=g.n_eff, rho1=st.rho1, rho2=st.rho2,
        w_motion=sc.motion.motion_weight if motion_cost else 0.0)


def _bisect_positions(sur: PositionSurrogate, lo, hi, iters: int = 200):
    d_lo, d_hi = lo.copy(), hi.copy()
    at_lo = sur.right_derivative(d_lo) >= 0
    for _ in range(iters):
        mid = (d_lo + d_hi) / 2
        up = sur.right_derivative(mid) >= 0
        d_hi = np.where(up, mid, d_hi)
        d_lo = np.where(up, d_lo, mid)
        if np.all(d_hi - d_lo <= 1e-16 + 1e-14 * np.abs(d_hi)):
            break
    return np.where(at_lo, lo, d_hi)


def _positions_coupled(sc: Scenario, sur: PositionSurrogate, lo, hi, tol):
    """Joint convex solve when the spacing constraint binds."""
    g = sc.geom
    d = cp.Variable(sur.x_prev.shape)
    K = sur.dx0.shape[0]
    slope0 = sur.dx0 / sur.rr0
    terms = [sur.w_motion * cp.sum(cp.abs(sur.x_prev + d - sur.x_home))]
    for k in range(K):
        for m in range(g.M):
            for n in range(g.N):
                dk = d[m, n]
                r = cp.norm(cp.hstack([sur.dx0[k, m, n] + dk,
                                       np.sqrt(sur.rr0[k, m, n]**2 - sur.dx0[k, m, n]**2)]))
                A = sur.gap0[k, m, n] + sur.kappa * (r - sur.rr0[k, m, n] + sur.n_eff * dk)
                B = -sur.gap0[k, m, n] - sur.kappa * (slope0[k, m, n] + sur.n_eff) * dk
                xi = cp.pos(cp.maximum(A, B))
                quad = sur.t_abs[k, m, n] ** 2 * cp.square(sur.dx0[k, m, n] + dk)
                coef = 2 * sur.c_abs[k, m, n] * sur.t_abs[k, m, n] * sur.cos_v[k, m, n]
                lin = coef * (r if sur.cos_v[k, m, n] >= 0 else slope0[k, m, n] * dk)
                terms.append(sur.rho1 / 2 * cp.square(xi) + sur.rho2 / 2 * (quad + lin))
    cons = [d >= lo, d <= hi]
    if g.N > 1:
        x = sur.x_prev + d
        cons.append(x[:, 1:] - x[:, :-1] >= g.delta_min)
    prob = cp.Problem(cp.Minimize(cp.sum(cp.hstack(terms))), cons)
    sol = solve_model(prob, tol=tol)
    if sol.status is not Status.OPTIMAL or d.value is None:
        return np.zeros_like(sur.x_prev)
    return np.clip(d.value, lo, hi)


POSITION_SNAP = 1e-9


def update_positions(sc: Scenario, st: AdmmState, settings: AdmmSettings):
    g = sc.geom
    sur = position_surrogate(sc, st, settings.motion_cost)
    lo_x, hi_x = reachable_interval(g, sc.motion)
    lo, hi = lo_x - st.X, hi_x - st.X
    lo, hi = np.minimum(lo, 0.0), np.maximum(hi, 0.0)
    d = _bisect_positions(sur, lo, hi)
    # sub-nanometre steps are bisection noise; keeping them only injects jitter
    d[np.abs(d) < POSITION_SNAP] = 0.0
    X = st.X + d
    if g.N > 1 and np.any(np.diff(X, axis=1) < g.delta_min):
        X = st.X + _positions_coupled(sc, sur, lo, hi, settings.solver_tol)
        if np.any(np.diff(X, axis=1) < g.delta_min):
            X = st.X.copy()
    return X


# ---------------------------------------------------------------- multipliers

def update_duals(sc: Scenario, st: AdmmState):
    dp, dc = split_residuals(sc, st)
    return st.mu + st.rho1 * dp, st.lam + st.rho2 * dc


def scale_penalties(st: AdmmState, settings: AdmmSettings):
    return (min(settings.epsilon * st.rho1, settings.rho_max),
            min(settings.epsilon * st.rho2, settings.rho_max))


def sweep(sc: Scenario, st: AdmmState, settings: AdmmSettings) -> str | None:
    """One pass over the primal blocks in place; returns an error token or None."""
    W, status = update_beamformer(sc, st, settings)
    if W is None:
        return "qos-infeasible" if st.iter == 0 else f"beamformer-{status.value}"
    st.W = W
    st.t, nf = update_t(sc, st)
    st.t_fallbacks += nf
    if settings.optimize_alpha:
        st.alpha = update_alpha(sc, st, settings)
    st.theta = update_theta(sc, st)
    st.X = update_positions(sc, st, settings)
    return None


def run(sc: Scenario, settings: AdmmSettings | None = None, init: AdmmState | None = None,
        algorithm: str = "continuous") -> SolveReport:
    """Alternate the five primal blocks and the multiplier step until both the
    split residual and the relative change of the average power are small."""
    settings = settings or AdmmSettings()
    st = init.copy() if init is not None else init_state(sc, settings)
    report = SolveReport(status="max-iter", algorithm=algorithm)
    f_prev = None
    t0 = time.perf_counter()
    for i in range(settings.max_iter):
        err = sweep(sc, st, settings)
        if err is not None:
            report.status = err
            break
        st.mu, st.lam = update_duals(sc, st)
        st.rho1, st.rho2 = scale_penalties(st, settings)
        st.iter += 1
        res = residual(sc, st)
        f = average_power(st.W, st.X, sc.motion)
        audit = sc.audit(st.X, st.alpha, st.W)
        report.history.append(IterRecord(st.iter, f, res, audit.worst, time.perf_counter() - t0))
        if (f_prev is not None and res <= settings.varsigma1
                and abs(f - f_prev) <= settings.varsigma2 * f_prev):
            report.status = "converged"
            break
        f_prev = f
    report.counters = {"t_fallbacks": st.t_fallbacks, "iterations": st.iter}
    report.state = st
    if not report.history:
        return report
    W = st.W
    if settings.polish:
        G = sc.channels(st.X) @ radiation_matrix(st.alpha)
        Wp, status = min_power_beamformer(G, sc.users.sigma2, sc.users.gamma,
                                          tol=settings.solver_tol)
        if Wp is not None:
            W = Wp
        else:
            report.counters["polish_failed"] = 1
    report.X, report.alpha, report.W = st.X.copy(), st.alpha.copy(), W
    report.audit = sc.audit(st.X, st.alpha, W)
    report.power = average_power(W, st.X, sc.motion)
    return report
