"""Backend-agnostic conic solves.

Two entry points share one status vocabulary:

* :class:`ConicProblem` / :func:`solve` take a problem in primal standard form
  (``min c'x  s.t.  A x = b,  x in K``) where ``K`` is a product of a free
  segment, a nonnegative orthant, second-order cones and PSD cones. The
  backend is Clarabel's interior-point method.
* :func:`solve_model` runs an already-modelled cvxpy problem through the same
  backend and maps its status.

Layout of ``x``: ``[free | nonneg | soc_1 | ... | psd_1 | ...]``. A second-order
block ``(u0, u1..)`` means ``||u1..|| <= u0``. A PSD block of side ``n`` stores
the ``n(n+1)/2`` upper-triangle entries column by column, unscaled.
"""
from __future__ import annotations

import enum
import time
import warnings
from dataclasses import dataclass, field

import clarabel
import cvxpy as cp
import numpy as np
import scipy.sparse as sp

DEFAULT_TOL = 1e-8


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    PRIMAL_INFEASIBLE = "primal-infeasible"
    DUAL_INFEASIBLE = "dual-infeasible"
    NUMERICAL_LIMIT = "numerical-limit"
    ITERATION_LIMIT = "iteration-limit"


@dataclass
class ConicSolution:
    status: Status
    x: np.ndarray | None
    objective: float
    max_residual: float = np.nan
    solve_time: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL


def triangle_size(n: int) -> int:
    return n * (n + 1) // 2


def triangle_index(n: int):
    """(row, col) pairs of the upper triangle, column-major."""
    return [(i, j) for j in range(n) for i in range(j + 1)]


def unpack_psd(v, n: int) -> np.ndarray:
    S = np.zeros((n, n))
    for val, (i, j) in zip(v, triangle_index(n)):
        S[i, j] = S[j, i] = val
    return S


def hermitian_embedding(H) -> np.ndarray:
    """Real symmetric embedding [[Re H, -Im H], [Im H, Re H]] of a Hermitian H.

    H is PSD iff the embedding is; each eigenvalue of H appears twice.
    """
    H = np.asarray(H)
    return np.block([[H.real, -H.imag], [H.imag, H.real]])


@dataclass
class ConicProblem:
    c: np.ndarray
    A: sp.spmatrix | np.ndarray
    b: np.ndarray
    n_free: int = 0
    n_nonneg: int = 0
    soc: list = field(default_factory=list)
    psd: list = field(default_factory=list)
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        self.A = sp.csc_matrix(self.A, dtype=float)
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.soc = [int(d) for d in self.soc]
        self.psd = [int(n) for n in self.psd]
        n = self.n_vars
        if self.c.size != n:
            raise ValueError(f"objective has {self.c.size} entries, cones cover {n} variables")
        if self.A.shape != (self.b.size, n):
            raise ValueError(f"constraint matrix shape {self.A.shape} inconsistent with "
                             f"{self.b.size} rows and {n} variables")
        if any(d < 1 for d in self.soc) or any(s < 1 for s in self.psd):
            raise ValueError("cone dimensions must be positive")
        if min(self.n_free, self.n_nonneg) < 0:
            raise ValueError("segment sizes must be non-negative")
        for name in ("lb", "ub"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=float).ravel()
                if v.size != n:
                    raise ValueError(f"{name} must have {n} entries")
                setattr(self, name, v)

    @property
    def n_vars(self) -> int:
        return (self.n_free + self.n_nonneg + sum(self.soc)
                + sum(triangle_size(s) for s in self.psd))

    def blocks(self):
        """Yield (kind, start, size) for every cone block in layout order."""
        pos = self.n_free
        if self.n_nonneg:
            yield "nonneg", pos, self.n_nonneg
        pos += self.n_nonneg
        for d in self.soc:
            yield "soc", pos, d
            pos += d
        for s in self.psd:
            yield "psd", pos, s
            pos += triangle_size(s)

    def residual(self, x) -> float:
        x = np.asarray(x, dtype=float)
        res = [np.max(np.abs(self.A @ x - self.b), initial=0.0)]
        for kind, start, size in self.blocks():
            if kind == "nonneg":
                res.append(max(0.0, -x[start:start + size].min()))
            elif kind == "soc":
                u = x[start:start + size]
                res.append(max(0.0, np.linalg.norm(u[1:]) - u[0]))
            else:
                S = unpack_psd(x[start:start + triangle_size(size)], size)
                res.append(max(0.0, -np.linalg.eigvalsh(S).min()))
        if self.lb is not None:
            res.append(np.max(self.lb - x, initial=0.0))
        if self.ub is not None:
            res.append(np.max(x - self.ub, initial=0.0))
        return float(max(res))


# Second attempt after a stalled or broken solve: shorter steps and a little
# more regularization get through the flat faces the lifted models sit on.
_CAUTIOUS = {"max_step_fraction": 0.9, "static_regularization_constant": 1e-7}


def _settings(tol: float, max_iter: int):
    s = clarabel.DefaultSettings()
    s.verbose = False
    s.tol_gap_abs = tol
    s.tol_gap_rel = tol
    s.tol_feas = tol
    s.max_iter = max_iter
    return s


_CLARABEL_STATUS = {
    "Solved": Status.OPTIMAL,
    "PrimalInfeasible": Status.PRIMAL_INFEASIBLE,
    "AlmostPrimalInfeasible": Status.PRIMAL_INFEASIBLE,
    "DualInfeasible": Status.DUAL_INFEASIBLE,
    "AlmostDualInfeasible": Status.DUAL_INFEASIBLE,
    "MaxIterations": Status.ITERATION_LIMIT,
    "MaxTime": Status.ITERATION_LIMIT,
}


def solve(problem: ConicProblem, tol: float = DEFAULT_TOL, x0=None,
          max_iter: int = 200) -> ConicSolution:
    """Solve a standard-form conic problem.

    ``x0`` is an optional feasible hint. The interior-point backend has no
    warm start, so the hint only serves as a fallback certificate: it is never
    allowed to turn an optimal solve into an infeasible verdict.
    """
    n = problem.n_vars
    rows, rhs, cones = [problem.A], [problem.b], []
    if problem.b.size:
        cones.append(clarabel.ZeroConeT(problem.b.size))
    n_nonneg_rows = 0
    if problem.lb is not None:
        idx = np.flatnonzero(np.isfinite(problem.lb))
        rows.append(-sp.eye(n, format="csc")[idx])
        rhs.append(-problem.lb[idx])
        n_nonneg_rows += idx.size
    if problem.ub is not None:
        idx = np.flatnonzero(np.isfinite(problem.ub))
        rows.append(sp.eye(n, format="csc")[idx])
        rhs.append(problem.ub[idx])
        n_nonneg_rows += idx.size
    for kind, start, size in problem.blocks():
        if kind == "nonneg":
            n_nonneg_rows += size
            rows.append(-sp.eye(n, format="csc")[start:start + size])
            rhs.append(np.zeros(size))
    if n_nonneg_rows:
        cones.append(clarabel.NonnegativeConeT(n_nonneg_rows))
    for kind, start, size in problem.blocks():
        if kind == "soc":
            rows.append(-sp.eye(n, format="csc")[start:start + size])
            rhs.append(np.zeros(size))
            cones.append(clarabel.SecondOrderConeT(size))
        elif kind == "psd":
            m = triangle_size(size)
            scale = np.array([1.0 if i == j else np.sqrt(2.0) for i, j in triangle_index(size)])
            sel = sp.eye(n, format="csc")[start:start + m]
            rows.append(-sp.diags(scale) @ sel)
            rhs.append(np.zeros(m))
            cones.append(clarabel.PSDTriangleConeT(size))
    A = sp.vstack(rows, format="csc")
    b = np.concatenate(rhs)
    P = sp.csc_matrix((n, n))
    t0 = time.perf_counter()
    for extra in ({}, _CAUTIOUS):
        settings = _settings(tol, max_iter)
        for k, v in extra.items():
            setattr(settings, k, v)
        out = clarabel.DefaultSolver(P, problem.c, A, b, cones, settings).solve()
        status = _CLARABEL_STATUS.get(str(out.status).split(".")[-1], Status.NUMERICAL_LIMIT)
        if status is not Status.NUMERICAL_LIMIT:
            break
    elapsed = time.perf_counter() - t0
    x = np.array(out.x)
    resid = problem.residual(x)
    if str(out.status).endswith("AlmostSolved") and resid <= tol:
        status = Status.OPTIMAL
    if status is Status.OPTIMAL and resid > max(tol, 1e-7) * max(1.0, np.abs(b).max(initial=0)):
        status = Status.NUMERICAL_LIMIT
    if status is not Status.OPTIMAL and x0 is not None:
        x0 = np.asarray(x0, dtype=float)
        if status is Status.PRIMAL_INFEASIBLE and problem.residual(x0) <= tol:
            # The hint certifies feasibility, so the verdict is a numerical failure.
            status = Status.NUMERICAL_LIMIT
    return ConicSolution(status, x, float(problem.c @ x), resid, elapsed)


_CVXPY_STATUS = {
    cp.OPTIMAL: Status.OPTIMAL,
    cp.OPTIMAL_INACCURATE: Status.NUMERICAL_LIMIT,
    cp.INFEASIBLE: Status.PRIMAL_INFEASIBLE,
    cp.INFEASIBLE_INACCURATE: Status.PRIMAL_INFEASIBLE,
    cp.UNBOUNDED: Status.DUAL_INFEASIBLE,
    cp.UNBOUNDED_INACCURATE: Status.DUAL_INFEASIBLE,
    cp.USER_LIMIT: Status.ITERATION_LIMIT,
}


def solve_model(problem: cp.Problem, tol: float = DEFAULT_TOL, max_iter: int = 200) -> ConicSolution:
    """Solve a cvxpy model with the same backend; values stay on its variables.

    On a hard solver failure the variables are cleared, so callers never read
    the previous solve's values by mistake.
    """
    t0 = time.perf_counter()
    opts = dict(tol_gap_abs=tol, tol_gap_rel=tol, tol_feas=tol, max_iter=max_iter)
    for extra in ({}, _CAUTIOUS):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", UserWarning)
                problem.solve(solver=cp.CLARABEL, **opts, **extra)
            break
        except cp.error.SolverError:
            continue
    else:
        for v in problem.variables():
            v.value = None
        return ConicSolution(Status.NUMERICAL_LIMIT, None, np.nan, np.nan,
                             time.perf_counter() - t0)
    status = _CVXPY_STATUS.get(problem.status, Status.NUMERICAL_LIMIT)
    value = problem.value if problem.value is not None else np.nan
    return ConicSolution(status, None, float(value), np.nan, time.perf_counter() - t0)
