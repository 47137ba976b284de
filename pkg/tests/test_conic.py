import cvxpy as cp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from passopt.conic import (ConicProblem, Status, hermitian_embedding, solve, solve_model,
                           triangle_index, triangle_size, unpack_psd)


def test_linear_program_with_bounds():
    # min x0 + 2 x1  s.t.  x0 + x1 = 1,  x >= 0
    prob = ConicProblem(c=[1.0, 2.0], A=[[1.0, 1.0]], b=[1.0], n_nonneg=2)
    sol = solve(prob)
    assert sol.ok
    np.testing.assert_allclose(sol.x, [1.0, 0.0], atol=1e-7)
    assert sol.objective == pytest.approx(1.0, abs=1e-7)


def test_second_order_cone_projection_distance():
    # min t  s.t. (t, u - p) in SOC, written with u fixed by equalities
    p = np.array([3.0, 4.0])
    A = np.c_[np.zeros((2, 1)), np.eye(2)]
    prob = ConicProblem(c=[1.0, 0.0, 0.0], A=A, b=-p, soc=[3])
    sol = solve(prob)
    assert sol.ok
    assert sol.objective == pytest.approx(5.0, abs=1e-6)


def test_psd_cone_minimum_eigenvalue():
    # max s s.t. S - s I is PSD, S fixed: answer is lambda_min(S)
    S = np.array([[2.0, 1.0], [1.0, 3.0]])
    m = triangle_size(2)
    A = np.zeros((m, 1 + m))
    b = np.zeros(m)
    for r, (i, j) in enumerate(triangle_index(2)):
        A[r, 1 + r] = 1.0
        if i == j:
            A[r, 0] = 1.0
        b[r] = S[i, j]
    prob = ConicProblem(c=[-1.0] + [0.0] * m, A=A, b=b, n_free=1, psd=[2])
    sol = solve(prob)
    assert sol.ok
    assert -sol.objective == pytest.approx(np.linalg.eigvalsh(S).min(), abs=1e-6)


def test_infeasible_problem_reported():
    prob = ConicProblem(c=[1.0], A=[[1.0]], b=[-1.0], n_nonneg=1)
    sol = solve(prob)
    assert sol.status is Status.PRIMAL_INFEASIBLE
    assert not sol.ok


def test_unbounded_problem_reported():
    prob = ConicProblem(c=[-1.0, 0.0], A=np.zeros((0, 2)), b=[], n_nonneg=2)
    assert solve(prob).status is Status.DUAL_INFEASIBLE


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        ConicProblem(c=[1.0, 2.0], A=[[1.0]], b=[1.0], n_nonneg=2)
    with pytest.raises(ValueError):
        ConicProblem(c=[1.0], A=[[1.0]], b=[1.0], soc=[0, 1])


def test_cvxpy_wrapper_statuses():
    x = cp.Variable()
    sol = solve_model(cp.Problem(cp.Minimize(x), [x >= 2]))
    assert sol.ok and sol.objective == pytest.approx(2.0, abs=1e-7)
    sol = solve_model(cp.Problem(cp.Minimize(x), [x >= 2, x <= 1]))
    assert sol.status is Status.PRIMAL_INFEASIBLE


def test_cvxpy_wrapper_retries_then_clears_stale_values(monkeypatch):
    x = cp.Variable()
    prob = cp.Problem(cp.Minimize(x), [x >= 2])
    solve_model(prob)
    calls = []

    def broken(*args, **kwargs):
        calls.append(kwargs)
        raise cp.error.SolverError("factorization failed")

    monkeypatch.setattr(prob, "solve", broken)
    sol = solve_model(prob)
    assert len(calls) == 2 and "max_step_fraction" in calls[1]
    assert sol.status is Status.NUMERICAL_LIMIT and x.value is None


def test_unpack_round_trip():
    S = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 5.0], [3.0, 5.0, 6.0]])
    v = [S[i, j] for i, j in triangle_index(3)]
    np.testing.assert_array_equal(unpack_psd(v, 3), S)


@given(st.integers(0, 10_000))
def test_embedding_doubles_spectrum(seed):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    H = B + B.conj().T
    ev = np.linalg.eigvalsh(H)
    emb = np.linalg.eigvalsh(hermitian_embedding(H))
    np.testing.assert_allclose(np.sort(np.r_[ev, ev]), emb, atol=1e-9)
