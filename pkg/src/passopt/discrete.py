"""Discrete antenna movement: position selection on a candidate grid.

Every PA picks one of ``N_tilde`` candidate positions inside its reachable
interval. With selection vectors ``z[m,n]`` the effective channel is linear
in z, and the product ``Q = Z A W`` is decoupled by a bilinear-to-LMI
transformation:

    [[P, Q, C], [Q^H, S, D^H], [C^H, D, I]] >= 0,  Tr(P) <= Tr(C C^H)

which forces ``Q = C D`` whenever ``C C^H`` has the stated trace, i.e. for a
binary selection. The binary constraint itself is handled by a concave
penalty linearized at the previous z.

The radiation ratios go into C, so the trace bound on P is the constant
sum of alpha^2 and D is the beamformer itself. ``joint`` uses one block with
C = Z A and D = W. ``per_pa`` writes one small block per PA with
C = alpha[m,n] z[m,n] and D = w_m^T, keeping the PSD sides at
N_tilde + K + 1.

The auxiliary ``S`` is bounded by the transmit power: Tr S <= p with
p >= ||W||^2 (per waveguide in ``per_pa``). Without that bound S is free, Q
decouples from W for any fractional z and the relaxation collapses to
W = 0. Because Tr(D^H D) equals that power bound at the optimum, the bound
also pins S to D^H D, which keeps the lifted product accurate at the
solver's tolerance rather than its square root.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from .beamforming import min_power_beamformer
from .conic import Status, solve_model
from .model import (Scenario, average_power, effective_channels, radiation_matrix,
                    reachable_interval)
from .radiation import update_radiation
from .report import IterRecord, SolveReport

MAX_CANDIDATES = 12


@dataclass
class BcdSettings:
    zeta: float = 1.0
    zeta_growth: float = 5.0
    varsigma: float = 1e-4
    max_iter: int = 100
    binary_tol: float = 1e-3
    solver_tol: float = 1e-7
    lmi: str = "per_pa"        # per_pa | joint | auto (joint while M*N*Nt <= JOINT_LMI_MAX)
    refine_iters: int = 50     # W/alpha alternations after rounding, z fixed
    local_search: int = 10     # max single-PA swap passes after rounding; 0 disables

    def __post_init__(self):
        if self.zeta <= 0 or self.zeta_growth < 1:
            raise ValueError("zeta must be positive and zeta_growth >= 1")
        if self.lmi not in ("per_pa", "joint", "auto"):
            raise ValueError("lmi must be 'per_pa', 'joint' or 'auto'")
        if self.max_iter < 1 or self.varsigma <= 0 or self.binary_tol <= 0:
            raise ValueError("invalid stopping parameters")
        if self.local_search < 0:
            raise ValueError("local_search must be >= 0")


@dataclass(eq=False)
class DiscreteGrid:
    N_tilde: int
    cand_x: np.ndarray          # (M, N, Nt)
    cand_channels: np.ndarray   # (K, M*N*Nt)
    disp: np.ndarray            # (M, N, Nt)

    @property
    def shape(self):
        return self.cand_x.shape

    def positions(self, idx) -> np.ndarray:
        """Positions (M, N) for per-PA candidate indices."""
        idx = np.asarray(idx)
        return np.take_along_axis(self.cand_x, idx[..., None], axis=2)[..., 0]

    def selected_channels(self, z) -> np.ndarray:
        """Z^H h_k for every user: (K, M*N), linear in z."""
        M, N, Nt = self.shape
        h = self.cand_channels.reshape(-1, M, N, Nt)
        return np.einsum("kmnj,mnj->kmn", h, np.asarray(z)).reshape(h.shape[0], M * N)


def build_grid(sc: Scenario, N_tilde: int, spacing_mode: str = "uniform",
               max_candidates: int = MAX_CANDIDATES) -> DiscreteGrid:
    if N_tilde < 1:
        raise ValueError("N_tilde must be >= 1")
    if N_tilde > max_candidates:
        raise ValueError(f"N_tilde={N_tilde} exceeds the cap {max_candidates}; raise max_candidates "
                         "explicitly to go beyond")
    if spacing_mode != "uniform":
        raise ValueError(f"unknown spacing mode {spacing_mode!r}")
    g, mo = sc.geom, sc.motion
    lo, hi = reachable_interval(g, mo)
    if N_tilde == 1:
        cand = np.clip(mo.X_init, lo, hi)[..., None]
    else:
        frac = np.linspace(0.0, 1.0, N_tilde)
        cand = lo[..., None] + (hi - lo)[..., None] * frac
    M, N, Nt = cand.shape
    # channels of every candidate: evaluate the core model waveguide by waveguide
    ch = np.empty((g.K, M, N, Nt), dtype=complex)
    for j in range(Nt):
        ch[:, :, :, j] = effective_channels(g, cand[:, :, j], sc.users.positions).reshape(g.K, M, N)
    disp = np.abs(cand - mo.X_init[..., None])
    return DiscreteGrid(Nt, cand, ch.reshape(g.K, -1), disp)


def penalty(z) -> float:
    """Binary penalty sum(z - z^2); zero exactly on binary points."""
    z = np.asarray(z)
    return float(np.sum(z - z**2))


def penalty_majorizer(z, z_prev) -> float:
    """Tangent upper bound of the binary penalty at z_prev."""
    z, z_prev = np.asarray(z), np.asarray(z_prev)
    return float(np.sum((1 - 2 * z_prev) * z + z_prev**2))


def binary_violation(z) -> float:
    z = np.asarray(z)
    return float(np.max(np.minimum(z, 1 - z), initial=0.0))


def selection_matrix(z) -> np.ndarray:
    """Block-diagonal Z of shape (M*N*Nt, M*N)."""
    M, N, Nt = np.shape(z)
    Z = np.zeros((M * N * Nt, M * N))
    for i, row in enumerate(np.asarray(z).reshape(M * N, Nt)):
        Z[i * Nt:(i + 1) * Nt, i] = row
    return Z


def bilinear_lift(C, D) -> np.ndarray:
    """Hermitian block [[C C^H, C D], [D^H C^H, D^H D]]; PSD with rank <= cols(C)."""
    C, D = np.asarray(C), np.asarray(D)
    B = C @ D
    return np.block([[C @ C.conj().T, B], [B.conj().T, D.conj().T @ D]])


def lifting_gap(sol: "WzSolution", alpha) -> float:
    """Frobenius distance between the lifted product Q and Z A W at a solution."""
    Z = selection_matrix(sol.z)
    return float(np.linalg.norm(sol.Q - Z @ radiation_matrix(alpha) @ sol.W))


# ---------------------------------------------------------------- joint (W, z) block

def _embed(Y, n):
    """Structure constraints making real Y (2n x 2n) the embedding of a Hermitian matrix."""
    # upper triangles only: the full matrix equalities repeat every row twice
    B = Y[n:, :n]
    cons = [cp.diag(Y[:n, :n] - Y[n:, n:]) == 0, cp.diag(B) == 0]
    if n > 1:
        cons += [cp.upper_tri(Y[:n, :n] - Y[n:, n:]) == 0, cp.upper_tri(B + B.T) == 0]
    return cons


@dataclass(eq=False)
class WzModel:
    problem: cp.Problem
    params: dict
    vars: dict
    scale: float
    lmi: str
    unit: float = 1.0   # watts per objective unit


JOINT_LMI_MAX = 24


def resolve_lmi(lmi: str, grid: "DiscreteGrid") -> str:
    if lmi != "auto":
        return lmi
    M, N, Nt = grid.shape
    return "joint" if M * N * Nt <= JOINT_LMI_MAX else "per_pa"


def _build_wz_model(sc: Scenario, grid: DiscreteGrid, lmi: str, fixed_z=None) -> WzModel:
    lmi = resolve_lmi(lmi, grid)
    g, mo, us = sc.geom, sc.motion, sc.users
    M, N, Nt = grid.shape
    K = g.K
    MN = M * N
    H = grid.cand_channels / np.sqrt(us.sigma2)[:, None]
    # W is measured in units of the unmoved array's beamformer so every block is O(1)
    W0, _ = min_power_beamformer(sc.channels(mo.X_init) @ radiation_matrix(np.full((M, N), N**-0.5)),
                                 us.sigma2, us.gamma)
    if W0 is not None:
        scale = np.linalg.norm(W0)
    else:
        scale = np.sqrt(Nt) / max(np.linalg.norm(H, axis=1).max(), 1e-300)
    H = H * scale
    Hr, Hi = H.real, H.imag
    c = np.sqrt(1 + 1 / us.gamma)

    Wr, Wi = cp.Variable((M, K)), cp.Variable((M, K))
    z = cp.Variable((MN, Nt), nonneg=True)
    Qr, Qi = cp.Variable((MN * Nt, K)), cp.Variable((MN * Nt, K))
    p = cp.Variable(nonneg=True)
    alpha = cp.Parameter((M, N), nonneg=True)
    alpha_sq = cp.Parameter((M, N), nonneg=True)    # kept separate so the model stays DPP
    lin = cp.Parameter((MN, Nt))

    cons = [z <= 1, cp.sum(z, axis=1) == 1]
    if fixed_z is not None:
        cons.append(z == np.asarray(fixed_z).reshape(MN, Nt))
    # SINR cones on the amplitudes conj(h_k)^T q_j
    Are = Hr @ Qr + Hi @ Qi
    Aim = Hr @ Qi - Hi @ Qr
    for k in range(K):
        cons.append(cp.norm(cp.hstack([Are[k], Aim[k], np.ones(1)])) <= c[k] * Are[k, k])
        cons.append(Aim[k, k] == 0)
    # spacing on the selected positions
    xsel = cp.sum(cp.multiply(grid.cand_x.reshape(MN, Nt), z), axis=1)
    if N > 1:
        for m in range(M):
            for n in range(1, N):
                cons.append(xsel[m * N + n] - xsel[m * N + n - 1] >= g.delta_min)
    traces_S = []
    if lmi == "per_pa":
        # one block per PA: C = alpha_i z_i, D = w_m^T, and S_i shares the power of its waveguide
        p_m = cp.Variable(M, nonneg=True)
        cons += [cp.sum_squares(cp.hstack([Wr[m], Wi[m]])) <= p_m[m] for m in range(M)]
        cons.append(cp.sum(p_m) <= p)
        n = Nt + K + 1
        for m in range(M):
            for nn in range(N):
                i = m * N + nn
                Y = cp.Variable((2 * n, 2 * n), PSD=True)
                cons += _embed(Y, n)
                R, I = Y[:n, :n], Y[n:, :n]
                rows = slice(i * Nt, (i + 1) * Nt)
                cons += [
                    R[:Nt, Nt:Nt + K] == Qr[rows], I[:Nt, Nt:Nt + K] == Qi[rows],
                    R[:Nt, n - 1] == alpha[m, nn] * z[i], I[:Nt, n - 1] == 0,
                    R[n - 1, Nt:Nt + K] == Wr[m], I[n - 1, Nt:Nt + K] == Wi[m],
                    R[n - 1, n - 1] == 1,
                    cp.trace(R[:Nt, :Nt]) <= alpha_sq[m, nn],
                    cp.trace(R[Nt:Nt + K, Nt:Nt + K]) <= p_m[m],
                ]
                traces_S.append(cp.trace(R[Nt:Nt + K, Nt:Nt + K]))
    else:
        # one block: C = Z A (L x M), D = W
        cons.append(cp.sum_squares(cp.hstack([cp.vec(Wr, order="F"), cp.vec(Wi, order="F")])) <= p)
        L = MN * Nt
        n = L + K + M
        Y = cp.Variable((2 * n, 2 * n), PSD=True)
        cons += _embed(Y, n)
        R, I = Y[:n, :n], Y[n:, :n]
        for m in range(M):
            col = L + K + m
            own = np.r_[m * N * Nt:(m + 1) * N * Nt].astype(int)
            for nn in range(N):
                i = m * N + nn
                cons.append(R[i * Nt:(i + 1) * Nt, col] == alpha[m, nn] * z[i])
            other = np.setdiff1d(np.arange(L), own)
            if other.size:
                cons.append(R[other, col] == 0)
        cons += [I[:L, L + K:] == 0,
                 R[L + K:, L:L + K] == Wr, I[L + K:, L:L + K] == Wi,
                 R[:L, L:L + K] == Qr, I[:L, L:L + K] == Qi,
                 cp.diag(R[L + K:, L + K:]) == 1,
                 cp.trace(R[:L, :L]) <= cp.sum(alpha_sq),
                 cp.trace(R[L:L + K, L:L + K]) <= p]
        if M > 1:
            # off-diagonal identity entries; _embed already covers the rest of the block
            cons += [cp.upper_tri(R[L + K:, L + K:]) == 0, cp.upper_tri(I[L + K:, L + K:]) == 0]
        traces_S.append(cp.trace(R[L:L + K, L:L + K]))
    trace_S = cp.sum(cp.hstack(traces_S))

    # objective unit: transmit power of the unmoved array with uniform ratios
    unit = mo.transmit_weight * scale**2
    motion = mo.motion_weight * grid.disp.reshape(MN, Nt) / unit
    obj = (mo.transmit_weight * scale**2 / unit) * p + cp.sum(cp.multiply(motion, z)) \
        + cp.sum(cp.multiply(lin, z))
    prob = cp.Problem(cp.Minimize(obj), cons)
    return WzModel(prob, {"alpha": alpha, "alpha_sq": alpha_sq, "lin": lin},
                   {"Wr": Wr, "Wi": Wi, "z": z, "Qr": Qr, "Qi": Qi, "p": p, "trace_S": trace_S}, scale, lmi, unit)


@dataclass
class WzSolution:
    status: Status
    W: np.ndarray | None
    z: np.ndarray | None
    Q: np.ndarray | None
    power_bound: float
    value: float          # surrogate objective (watts)


def update_w_z(sc: Scenario, grid: DiscreteGrid, alpha, z_prev, zeta: float,
               model: WzModel | None = None, settings: BcdSettings | None = None) -> WzSolution:
    """Solve the convex (W, z, Q, P, S) subproblem for fixed alpha and z_prev."""
    settings = settings or BcdSettings()
    model = model or _build_wz_model(sc, grid, settings.lmi)
    M, N, Nt = grid.shape
    z_prev = np.asarray(z_prev, dtype=float).reshape(M * N, Nt)
    model.params["alpha"].value = np.asarray(alpha, dtype=float)
    model.params["alpha_sq"].value = np.asarray(alpha, dtype=float) ** 2
    lin = zeta * (1 - 2 * z_prev)
    # rows of z sum to one, so a per-row shift of the penalty slope is a constant
    shift = lin.min(axis=1)
    model.params["lin"].value = (lin - shift[:, None]) / model.unit
    sol = solve_model(model.problem, tol=settings.solver_tol)
    v = model.vars
    usable = sol.status in (Status.OPTIMAL, Status.NUMERICAL_LIMIT)
    if not usable or v["z"].value is None:
        return WzSolution(sol.status, None, None, None, np.nan, np.nan)
    s = model.scale
    W = (v["Wr"].value + 1j * v["Wi"].value) * s
    Q = (v["Qr"].value + 1j * v["Qi"].value) * s
    z = np.clip(v["z"].value, 0.0, 1.0).reshape(M, N, Nt)
    value = sol.objective * model.unit + shift.sum() + zeta * float(np.sum(z_prev**2))
    return WzSolution(sol.status, W, z, Q, float(v["p"].value) * s**2, float(value))


def surrogate_value(sc: Scenario, grid: DiscreteGrid, power_bound: float, z, z_prev, zeta) -> float:
    """Penalized objective majorizer evaluated at a (power, z) pair."""
    mo = sc.motion
    return float(mo.transmit_weight * power_bound + mo.motion_weight * np.sum(grid.disp * z)
                 + zeta * penalty_majorizer(z, z_prev))


def update_alpha_discrete(sc: Scenario, grid: DiscreteGrid, alpha, W, z, tol: float = 1e-8):
    """Radiation step with the selected channels Z^H h_k in place of the proxies."""
    ch = grid.selected_channels(z)
    new, _, _ = update_radiation(ch, alpha, W, sc.users.sigma2, sc.users.gamma, tol=tol)
    return new


# ---------------------------------------------------------------- rounding

def repair_selection(grid: DiscreteGrid, idx, delta_min: float):
    """Greedy spacing repair; returns indices or None when no fix exists."""
    idx = np.array(idx)
    M, N, Nt = grid.shape
    for m in range(M):
        for n in range(1, N):
            prev = grid.cand_x[m, n - 1, idx[m, n - 1]]
            if grid.cand_x[m, n, idx[m, n]] - prev >= delta_min - 1e-12:
                continue
            ok = np.flatnonzero(grid.cand_x[m, n] - prev >= delta_min - 1e-12)
            if ok.size == 0:
                return None
            cur = grid.cand_x[m, n, idx[m, n]]
            idx[m, n] = ok[np.argmin(np.abs(grid.cand_x[m, n, ok] - cur))]
    return idx


def one_hot(idx, Nt) -> np.ndarray:
    return np.eye(Nt)[np.asarray(idx)]


def refine_fixed(sc: Scenario, X, alpha, iters: int, tol: float = 1e-8, varsigma: float = 1e-4):
    """Alternate min-power W and the radiation step at fixed positions."""
    ch = sc.channels(X)
    W, status = min_power_beamformer(ch @ radiation_matrix(alpha), sc.users.sigma2,
                                     sc.users.gamma, tol=tol)
    if W is None:
        return None, alpha, status
    prev = np.sum(np.abs(W) ** 2)
    for _ in range(iters):
        a_new, _, _ = update_radiation(ch, alpha, W, sc.users.sigma2, sc.users.gamma, tol=tol)
        W_new, st = min_power_beamformer(ch @ radiation_matrix(a_new), sc.users.sigma2,
                                         sc.users.gamma, tol=tol)
        if W_new is None:
            break
        cur = np.sum(np.abs(W_new) ** 2)
        if cur > prev:
            break
        alpha, W = a_new, W_new
        if prev - cur <= varsigma * prev:
            break
        prev = cur
    return W, alpha, Status.OPTIMAL


def selection_cost(sc: Scenario, grid: DiscreteGrid, idx, alpha, tol: float = 1e-8) -> float:
    """Average power of a selection with its min-power beamformer; inf if QoS fails."""
    X = grid.positions(idx)
    G = sc.channels(X) @ radiation_matrix(alpha)
    W, _ = min_power_beamformer(G, sc.users.sigma2, sc.users.gamma, tol=tol)
    return np.inf if W is None else average_power(W, X, sc.motion)


def local_search(sc: Scenario, grid: DiscreteGrid, idx, alpha, passes: int, tol: float = 1e-8):
    """Single-PA swap descent over candidates at fixed alpha; returns (idx, cost, swaps)."""
    idx = np.array(idx)
    M, N, Nt = grid.shape
    dmin = sc.geom.delta_min - 1e-12
    cost = selection_cost(sc, grid, idx, alpha, tol)
    swaps = 0
    for _ in range(passes):
        improved = False
        for m in range(M):
            for n in range(N):
                best_c, best = idx[m, n], cost
                for c in range(Nt):
                    if c == idx[m, n]:
                        continue
                    x = grid.cand_x[m, n, c]
                    if n > 0 and x - grid.cand_x[m, n - 1, idx[m, n - 1]] < dmin:
                        continue
                    if n < N - 1 and grid.cand_x[m, n + 1, idx[m, n + 1]] - x < dmin:
                        continue
                    trial = idx.copy()
                    trial[m, n] = c
                    val = selection_cost(sc, grid, trial, alpha, tol)
                    if val < best * (1 - 1e-9):
                        best_c, best = c, val
                if best_c != idx[m, n]:
                    idx[m, n], cost = best_c, best
                    swaps += 1
                    improved = True
        if not improved:
            break
    return idx, cost, swaps


def round_and_repair(sc: Scenario, grid: DiscreteGrid, z, alpha, settings: BcdSettings | None = None):
    """Argmax rounding, spacing repair and a beamforming re-solve.

    The swap search runs at fixed ratios, so a PA whose ratio has collapsed
    to zero is invisible to it; the search is therefore repeated from uniform
    ratios and the cheaper design is kept. Returns (z_binary, X, alpha, W, status).
    """
    settings = settings or BcdSettings()
    M, N, Nt = grid.shape
    idx = repair_selection(grid, np.argmax(np.asarray(z), axis=2), sc.geom.delta_min)
    if idx is None:
        return None, None, alpha, None, "rounding-failed"
    X = grid.positions(idx)
    W, alpha, status = refine_fixed(sc, X, alpha, settings.refine_iters, settings.solver_tol,
                                    settings.varsigma)
    cur = average_power(W, X, sc.motion) if W is not None else np.inf
    if settings.local_search:
        starts = [alpha]
        uniform = np.full((M, N), 1 / np.sqrt(N))
        if not np.allclose(alpha, uniform):
            starts.append(uniform)
        base = idx
        for a0 in starts:
            new_idx, _, swaps = local_search(sc, grid, base, a0, settings.local_search,
                                             settings.solver_tol)
            if not swaps and a0 is alpha:
                continue
            Xn = grid.positions(new_idx)
            Wn, an, _ = refine_fixed(sc, Xn, a0, settings.refine_iters, settings.solver_tol,
                                     settings.varsigma)
            if Wn is not None and average_power(Wn, Xn, sc.motion) < cur:
                idx, X, W, alpha = new_idx, Xn, Wn, an
                cur = average_power(W, X, sc.motion)
    if W is None:
        return one_hot(idx, Nt), X, alpha, None, "qos-infeasible"
    return one_hot(idx, Nt), X, alpha, W, "ok"


# ---------------------------------------------------------------- driver

def grid_indices(grid: DiscreteGrid, X, atol: float = 1e-9):
    """Candidate indices reproducing positions X, or None if some position is off-grid."""
    diff = np.abs(grid.cand_x - np.asarray(X)[..., None])
    idx = np.argmin(diff, axis=2)
    if np.any(np.take_along_axis(diff, idx[..., None], axis=2) > atol):
        return None
    return idx


def run_discrete(sc: Scenario, grid: DiscreteGrid, settings: BcdSettings | None = None,
                 incumbent: SolveReport | None = None) -> SolveReport:
    """Penalized BCD on the candidate grid, then rounding and a fixed-position polish.

    ``incumbent`` is a finished design (typically from a coarser nested grid).
    When its positions lie on this grid it is a valid answer here too, and the
    cheaper of it and the rounded BCD design is returned.
    """
    settings = settings or BcdSettings()
    M, N, Nt = grid.shape
    model = _build_wz_model(sc, grid, settings.lmi)
    alpha = np.full((M, N), 1 / np.sqrt(N))
    z_prev = np.zeros((M, N, Nt))
    zeta = settings.zeta
    report = SolveReport(status="max-iter", algorithm=f"discrete-{Nt}")
    report.counters = {"alpha_rejections": 0, "zeta_stages": 1}
    stages = []
    t0 = time.perf_counter()
    prev_value = None
    alpha_used = alpha
    z = None
    for it in range(settings.max_iter):
        sol = update_w_z(sc, grid, alpha, z_prev, zeta, model, settings)
        if sol.W is not None and prev_value is not None and sol.value > prev_value * (1 + 10 * settings.solver_tol) + 1e-12:
            # the radiation step broke the descent; redo the block with the previous ratios
            report.counters["alpha_rejections"] += 1
            alpha = alpha_used
            sol = update_w_z(sc, grid, alpha, z_prev, zeta, model, settings)
        if sol.W is None:
            infeasible = sol.status is Status.PRIMAL_INFEASIBLE
            report.status = "qos-infeasible" if infeasible else f"solver-{sol.status.value}"
            break
        if sol.status is not Status.OPTIMAL:
            report.counters["inaccurate_solves"] = report.counters.get("inaccurate_solves", 0) + 1
        alpha_used = alpha
        z = sol.z
        audit_viol = binary_violation(z)
        report.history.append(IterRecord(it + 1, sol.value, penalty(z), audit_viol,
                                         time.perf_counter() - t0))
        stages.append(report.counters["zeta_stages"])
        converged = prev_value is not None and abs(sol.value - prev_value) <= settings.varsigma * abs(prev_value)
        prev_value = sol.value
        alpha = update_alpha_discrete(sc, grid, alpha, sol.W, z, settings.solver_tol)
        z_prev = z
        if converged:
            if audit_viol <= settings.binary_tol:
                report.status = "converged"
                break
            zeta *= settings.zeta_growth
            report.counters["zeta_stages"] += 1
            prev_value = None
    report.counters["stage"] = stages
    report.counters["iterations"] = len(report.history)
    if z is None:
        return report
    zb, X, alpha_f, W, status = round_and_repair(sc, grid, z, alpha_used, settings)
    report.z = zb
    if status == "ok":
        report.X, report.alpha, report.W = X, alpha_f, W
        report.audit = sc.audit(X, alpha_f, W)
        report.power = average_power(W, X, sc.motion)
    else:
        report.status = status
    _adopt_incumbent(sc, grid, report, incumbent)
    return report


def _adopt_incumbent(sc, grid, report, incumbent):
    if incumbent is None or incumbent.W is None or incumbent.X is None:
        return
    idx = grid_indices(grid, incumbent.X)
    if idx is None:
        return
    audit = sc.audit(incumbent.X, incumbent.alpha, incumbent.W)
    power = average_power(incumbent.W, incumbent.X, sc.motion)
    if not audit.feasible or (report.W is not None and power >= report.power):
        return
    if report.W is None:
        report.status = "incumbent"
    report.X, report.alpha, report.W = incumbent.X, incumbent.alpha, incumbent.W
    report.z = one_hot(idx, grid.shape[2])
    report.audit, report.power = audit, power
    report.counters["incumbent_kept"] = 1


def relaxed_lower_envelope(report: SolveReport) -> float:
    """Smallest penalized surrogate value seen along the run."""
    obj = report.objectives()
    return float(obj.min()) if obj.size else float("nan")
