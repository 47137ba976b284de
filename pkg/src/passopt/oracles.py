"""Brute-force and closed-form references for the optimizers.

Nothing here calls the conic layer or the optimizers: beamforming powers come
from closed forms (one user) or from the uplink-downlink duality fixed point
(several users), and positions come from exhaustive scans.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import Scenario, effective_channels, radiation_matrix, reachable_interval


def grid_oracle_1d(sc: Scenario, resolution: float = 1e-4):
    """Best single-PA position by exhaustive scan; returns (x*, power*).

    The grid is anchored at the initial position and extended by
    ``resolution`` steps in both directions, plus both interval ends, so grids
    with resolutions r and r/j are nested.
    """
    g, mo, us = sc.geom, sc.motion, sc.users
    if (g.M, g.N, g.K) != (1, 1, 1):
        raise ValueError("grid_oracle_1d handles M = N = K = 1 only")
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    lo, hi = (float(v[0, 0]) for v in reachable_interval(g, mo))
    x0 = float(mo.X_init[0, 0])
    n_lo = int(np.floor((x0 - lo) / resolution + 1e-9))
    n_hi = int(np.floor((hi - x0) / resolution + 1e-9))
    xs = np.unique(np.r_[lo, x0 + resolution * np.arange(-n_lo, n_hi + 1), hi])
    xs = xs[(xs >= lo) & (xs <= hi)]
    power = scalar_power(sc, xs)
    i = int(np.argmin(power))
    return float(xs[i]), float(power[i])


def scalar_power(sc: Scenario, xs) -> np.ndarray:
    """Average power of the single-PA system at positions xs, full radiation."""
    g, mo, us = sc.geom, sc.motion, sc.users
    ux, uy = us.positions[0]
    r2 = (np.asarray(xs) - ux) ** 2 + (g.y[0] - uy) ** 2 + g.h**2
    tx = us.gamma[0] * us.sigma2[0] * r2 / g.beta**2
    return mo.transmit_weight * tx + mo.motion_weight * np.abs(np.asarray(xs) - mo.X_init[0, 0])


def duality_beamformer(G, sigma2, gamma, iters: int = 5000, tol: float = 1e-13):
    """Min-power beamformer by the uplink-downlink duality fixed point.

    ``G[k]`` is the effective channel with amplitude ``conj(G[k]) @ w_j``.
    Returns ``(W, power)`` or ``(None, inf)`` when the targets are not met.
    """
    G = np.asarray(G, dtype=complex)
    K, M = G.shape
    G = G / np.sqrt(np.broadcast_to(np.asarray(sigma2, dtype=float), (K,)))[:, None]
    gamma = np.broadcast_to(np.asarray(gamma, dtype=float), (K,))
    lam = np.zeros(K)
    eye = np.eye(M)
    for _ in range(iters):
        Sigma = eye + (G.T * lam) @ G.conj()
        Sinv_G = np.linalg.solve(Sigma, G.T)                   # columns Sigma^-1 g_k
        quad = np.real(np.einsum("mk,mk->k", G.T.conj(), Sinv_G))
        new = 1.0 / ((1 + 1 / gamma) * quad)
        done = np.max(np.abs(new - lam)) <= tol * max(1.0, np.max(np.abs(new)))
        lam = new
        if done or not np.all(np.isfinite(lam)) or lam.max() > 1e30:
            break
    if not np.all(np.isfinite(lam)):
        return None, np.inf
    Sigma = eye + (G.T * lam) @ G.conj()
    U = np.linalg.solve(Sigma, G.T)
    U /= np.linalg.norm(U, axis=0)
    amp2 = np.abs(G.conj() @ U) ** 2                         # [k, j] gain of beam j at user k
    Amat = -amp2.copy()
    Amat[np.diag_indices(K)] = np.diag(amp2) / gamma
    try:
        p = np.linalg.solve(Amat, np.ones(K))
    except np.linalg.LinAlgError:
        return None, np.inf
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        return None, np.inf
    W = U * np.sqrt(p)
    return W, float(p.sum())


def min_transmit_power(G, sigma2, gamma) -> float:
    """Reference minimum of sum ||w_k||^2; closed form for one user."""
    G = np.atleast_2d(np.asarray(G, dtype=complex))
    if G.shape[0] == 1:
        return float(np.asarray(gamma).ravel()[0] * np.asarray(sigma2).ravel()[0]
                     / np.sum(np.abs(G) ** 2))
    return duality_beamformer(G, sigma2, gamma)[1]


@dataclass
class DiscreteOptimum:
    z: np.ndarray
    X: np.ndarray
    alpha: np.ndarray
    W: np.ndarray | None
    power: float


def _alpha_candidates(M: int, N: int, steps: int):
    """Unit-norm nonnegative radiation rows: scalar 1 for N = 1, a polar scan for N = 2."""
    if N == 1:
        return [np.ones((M, 1))]
    if N == 2:
        taus = np.linspace(0.0, np.pi / 2, steps)
        rows = np.c_[np.cos(taus), np.sin(taus)]
        return [np.array(c) for c in itertools.product(rows, repeat=M)]
    raise ValueError("the exhaustive oracle scans radiation ratios for N <= 2 only")


def exhaustive_discrete_oracle(sc: Scenario, grid, alpha_steps: int = 401, refine: int = 40,
                               cap: int = 100_000) -> DiscreteOptimum:
    """Global optimum of the discrete problem by enumerating every selection.

    For each spacing-feasible selection the radiation ratios are scanned on a
    polar grid (N = 2) and refined by golden-section search around the best
    grid point; powers come from :func:`min_transmit_power`.
    """
    g, mo, us = sc.geom, sc.motion, sc.users
    M, N, Nt = grid.cand_x.shape
    if Nt ** (M * N) > cap:
        raise ValueError(f"{Nt}^{M * N} selections exceed the enumeration cap {cap}")
    best = DiscreteOptimum(None, None, None, None, np.inf)
    alphas = _alpha_candidates(M, N, alpha_steps)
    for sel in itertools.product(range(Nt), repeat=M * N):
        idx = np.array(sel).reshape(M, N)
        X = np.take_along_axis(grid.cand_x, idx[..., None], axis=2)[..., 0]
        if N > 1 and np.any(np.diff(X, axis=1) < g.delta_min - 1e-12):
            continue
        ch = effective_channels(g, X, us.positions)
        motion = mo.motion_weight * float(np.sum(np.abs(X - mo.X_init)))

        def tx(alpha):
            return min_transmit_power(ch @ radiation_matrix(alpha), us.sigma2, us.gamma)

        vals = [tx(a) for a in alphas]
        j = int(np.argmin(vals))
        alpha, val = alphas[j], vals[j]
        if N == 2 and M == 1 and np.isfinite(val) and refine:
            alpha, val = _golden_refine(tx, j, alpha_steps, alpha, val, refine)
        total = mo.transmit_weight * val + motion
        if total < best.power:
            W = None
            if np.isfinite(val):
                G = ch @ radiation_matrix(alpha)
                W = (np.sqrt(val / np.sum(np.abs(G) ** 2)) * G.conj().T / np.linalg.norm(G)
                     if g.K == 1 else duality_beamformer(G, us.sigma2, us.gamma)[0])
            best = DiscreteOptimum(np.eye(Nt)[idx], X, alpha, W, float(total))
    return best


def _golden_refine(f, j, steps, alpha, val, iters):
    """Golden-section search on the polar angle within one grid cell of index j."""
    h = (np.pi / 2) / (steps - 1)
    a, b = max(0.0, (j - 1) * h), min(np.pi / 2, (j + 1) * h)

    def fa(tau):
        return f(np.array([[np.cos(tau), np.sin(tau)]]))

    phi = (np.sqrt(5) - 1) / 2
    c, d = b - phi * (b - a), a + phi * (b - a)
    fc, fd = fa(c), fa(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = fa(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = fa(d)
    tau, v = (c, fc) if fc < fd else (d, fd)
    if v < val:
        return np.array([[np.cos(tau), np.sin(tau)]]), v
    return alpha, val


def finite_diff_check(f, grad_f, points, step: float = 1e-6) -> float:
    """Largest central-difference deviation from ``grad_f`` over scalar points.

    Deviations are divided by the largest analytic gradient magnitude so
    points near a stationary value do not inflate the ratio.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    pts = np.asarray(points, dtype=float)
    fd = (f(pts + step) - f(pts - step)) / (2 * step)
    g = np.asarray(grad_f(pts), dtype=float)
    scale = max(np.max(np.abs(g)), np.finfo(float).tiny)
    return float(np.max(np.abs(fd - g)) / scale)
