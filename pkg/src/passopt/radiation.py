"""Radiation-ratio update: maximize the SINR sum over alpha with W fixed.

The amplitude of beam j at user k is linear in alpha,
``s_kj = sum_{m,n} conj(t_k[mn]) alpha_mn w_mj = alpha . b_kj``, so each
ratio is a quotient of quadratics in alpha. The quadratic transform replaces
every ratio by ``2 q_k |s_kk| - q_k^2 (I_k + sigma_k^2)`` and ``|s_kk|`` is
bounded from below by its tangent at the previous alpha.

Every amplitude is divided by the user's noise amplitude before modelling.
The surrogate is invariant to that per-user rescaling (q scales inversely),
and it keeps solver data O(1).
"""
from __future__ import annotations

from functools import lru_cache

import cvxpy as cp
import numpy as np

from .conic import Status, solve_model


def amplitude_vectors(channels, W, M: int, N: int) -> np.ndarray:
    """b[k, j, :] such that s_kj = alpha.ravel() @ b[k, j]; shape (K, K, MN)."""
    t = np.conj(np.asarray(channels)).reshape(-1, M, N)
    W = np.asarray(W)
    b = t[:, None, :, :] * W.T[None, :, :, None]
    return b.reshape(t.shape[0], W.shape[1], M * N)


def qt_weights(channels, alpha, W, sigma2) -> np.ndarray:
    """Optimal quadratic-transform auxiliaries q_k = |s_kk| / (I_k + sigma_k^2)."""
    M, N = alpha.shape
    s = np.einsum("kjn,n->kj", amplitude_vectors(channels, W, M, N), alpha.ravel())
    p = np.abs(s) ** 2
    sig = np.diag(p)
    return np.sqrt(sig) / (p.sum(axis=1) - sig + sigma2)


def qt_objective(channels, alpha, W, sigma2, q) -> float:
    """Quadratic-transform surrogate evaluated at alpha for given q."""
    M, N = alpha.shape
    s = np.einsum("kjn,n->kj", amplitude_vectors(channels, W, M, N), alpha.ravel())
    p = np.abs(s) ** 2
    sig = np.diag(p)
    return float(np.sum(2 * q * np.sqrt(sig) - q**2 * (p.sum(axis=1) - sig + sigma2)))


def signal_lower_bound(b, alpha, alpha_prev) -> float:
    """Tangent minorant of |alpha . b|^2 expanded at alpha_prev."""
    s0 = alpha_prev @ b
    return float(2 * np.real(np.conj(s0) * (alpha @ b)) - abs(s0) ** 2)


@lru_cache(maxsize=32)
def _model(M: int, N: int, K: int):
    MN = M * N
    a = cp.Variable(MN, nonneg=True)
    psi = cp.Variable(K)
    q = cp.Parameter(K, nonneg=True)
    Fq = [cp.Parameter((2 * (K - 1), MN)) for _ in range(K)] if K > 1 else []
    Fg = [cp.Parameter((2 * (K - 1), MN)) for _ in range(K)] if K > 1 else []
    g = cp.Parameter(K, nonneg=True)
    lin = cp.Parameter((K, MN))
    off = cp.Parameter(K)
    obj = 2 * q @ psi
    cons = [cp.norm(a[m * N:(m + 1) * N]) <= 1 for m in range(M)]
    for k in range(K):
        cons.append(cp.square(psi[k]) <= 2 * lin[k] @ a - off[k])
        if K > 1:
            obj = obj - cp.sum_squares(Fq[k] @ a)
            cons.append(cp.norm(cp.hstack([Fg[k] @ a, g[k:k + 1]])) <= psi[k])
        else:
            cons.append(g[k] <= psi[k])
    prob = cp.Problem(cp.Maximize(obj), cons)
    return prob, a, psi, q, Fq, Fg, g, lin, off


def update_radiation(channels, alpha_prev, W, sigma2, gamma, keep_feasible: bool = True,
                     tol: float = 1e-8):
    """One quadratic-transform / tangent step on the radiation ratios.

    With ``keep_feasible`` the new alpha keeps every user's SINR at or above
    ``min(Gamma_k, SINR_k(alpha_prev))``, so a beamformer feasible before the
    step stays feasible after it. Returns ``(alpha, q, status)``; on a flat
    objective (W = 0) or a failed solve the previous alpha is returned.
    """
    alpha_prev = np.asarray(alpha_prev, dtype=float)
    M, N = alpha_prev.shape
    W = np.asarray(W)
    K = W.shape[1]
    sigma2 = np.broadcast_to(np.asarray(sigma2, dtype=float), (K,))
    gamma = np.broadcast_to(np.asarray(gamma, dtype=float), (K,))
    b = amplitude_vectors(channels, W, M, N) / np.sqrt(sigma2)[:, None, None]
    a0 = alpha_prev.ravel()
    s = np.einsum("kjn,n->kj", b, a0)
    p = np.abs(s) ** 2
    sig = np.diag(p)
    interf = p.sum(axis=1) - sig
    q = np.sqrt(sig) / (interf + 1.0)
    if not np.any(q > 1e-12):
        return alpha_prev.copy(), q, Status.OPTIMAL
    sinr_prev = sig / (interf + 1.0)
    g_eff = np.minimum(gamma, sinr_prev) if keep_feasible else np.zeros(K)

    prob, a, psi, qp, Fq, Fg, g, lin, off = _model(M, N, K)
    qp.value = q
    g.value = np.sqrt(np.maximum(g_eff, 0.0))
    diag = b[np.arange(K), np.arange(K)]
    lin.value = np.real(np.conj(s[np.arange(K), np.arange(K)])[:, None] * diag)
    off.value = sig
    for k in range(K if K > 1 else 0):
        others = np.delete(b[k], k, axis=0)
        F = np.vstack([others.real, others.imag])
        Fq[k].value = q[k] * F
        Fg[k].value = np.sqrt(max(g_eff[k], 0.0)) * F
    sol = solve_model(prob, tol=tol)
    if sol.status is not Status.OPTIMAL or a.value is None:
        return alpha_prev.copy(), q, sol.status
    new = np.clip(a.value, 0.0, None).reshape(M, N)
    # Solver tolerance can leave rows a hair outside the unit ball.
    norms = np.linalg.norm(new, axis=1)
    new /= np.maximum(norms, 1.0)[:, None]
    if keep_feasible:
        s_new = np.einsum("kjn,n->kj", b, new.ravel())
        pn = np.abs(s_new) ** 2
        sn = np.diag(pn)
        if np.any(sn / (pn.sum(axis=1) - sn + 1.0) < g_eff * (1 - 1e-6)):
            return alpha_prev.copy(), q, Status.NUMERICAL_LIMIT
    return new, q, sol.status
