"""Minimum-power beamforming under per-user SINR targets with fixed channels.

Because a common phase rotation of ``w_k`` changes neither the power nor any
SINR, the desired-signal amplitude can be taken real, which turns the SINR
constraints into second-order cones:

    || (g_k^H w_1, ..., g_k^H w_K, sigma_k) || <= sqrt(1 + 1/Gamma_k) Re{g_k^H w_k}
    Im{g_k^H w_k} = 0
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .conic import ConicProblem, Status, solve


def socp_data(G, sigma2, gamma):
    """Standard-form SOCP minimizing ||W||_F for effective channels ``G`` (K, M).

    Channels are normalized by the noise amplitude and a common scale so the
    solver works with O(1) numbers; returns the problem and that scale.
    """
    G = np.asarray(G, dtype=complex)
    K, M = G.shape
    sigma2 = np.broadcast_to(np.asarray(sigma2, dtype=float), (K,))
    gamma = np.broadcast_to(np.asarray(gamma, dtype=float), (K,))
    Gn = G / np.sqrt(sigma2)[:, None]
    scale = 1.0 / max(np.linalg.norm(Gn, axis=1).max(), 1e-300)
    Gs = Gn * scale
    c = np.sqrt(1.0 + 1.0 / gamma)

    nw = 2 * M * K
    d_blk = 2 * K + 2
    n = 1 + nw + K * d_blk

    def w_re(j):
        return 1 + 2 * M * j + np.arange(M)

    def w_im(j):
        return 1 + 2 * M * j + M + np.arange(M)

    rows, cols, vals, rhs = [], [], [], []
    r = 0

    def put(row, idx, coeffs):
        rows.extend([row] * len(idx))
        cols.extend(idx)
        vals.extend(coeffs)

    for k in range(K):
        base = 1 + nw + k * d_blk
        gr, gi = Gs[k].real, Gs[k].imag
        # Re{g^H w_j} = gr.a + gi.b ; Im{g^H w_j} = gr.b - gi.a
        put(r, [base], [1.0])
        put(r, w_re(k), -c[k] * gr)
        put(r, w_im(k), -c[k] * gi)
        rhs.append(0.0)
        r += 1
        for j in range(K):
            put(r, [base + 1 + 2 * j], [1.0])
            put(r, w_re(j), -gr)
            put(r, w_im(j), -gi)
            rhs.append(0.0)
            r += 1
            put(r, [base + 2 + 2 * j], [1.0])
            put(r, w_im(j), -gr)
            put(r, w_re(j), gi)
            rhs.append(0.0)
            r += 1
        put(r, [base + d_blk - 1], [1.0])
        rhs.append(1.0)
        r += 1
        put(r, w_im(k), gr)
        put(r, w_re(k), -gi)
        rhs.append(0.0)
        r += 1
    A = sp.csc_matrix((vals, (rows, cols)), shape=(r, n))
    cost = np.zeros(n)
    cost[0] = 1.0
    prob = ConicProblem(c=cost, A=A, b=np.array(rhs), soc=[1 + nw] + [d_blk] * K)
    return prob, scale


def unpack_w(x, M, K, scale):
    w = x[1:1 + 2 * M * K].reshape(K, 2, M)
    return ((w[:, 0] + 1j * w[:, 1]).T) * scale


def min_power_beamformer(G, sigma2, gamma, tol: float = 1e-9):
    """Solve the power-minimization SOCP for effective channels ``G`` (K, M).

    ``G[k]`` is the vector ``g_k`` with the received amplitude of beam ``j`` at
    user ``k`` equal to ``g_k^H w_j``. Returns ``(W, status)`` with ``W`` of
    shape (M, K), or ``(None, status)`` when the targets are unattainable.
    """
    G = np.asarray(G, dtype=complex)
    K, M = G.shape
    prob, scale = socp_data(G, sigma2, gamma)
    sol = solve(prob, tol=tol)
    if sol.status is not Status.OPTIMAL:
        return None, sol.status
    return unpack_w(sol.x, M, K, scale), sol.status
