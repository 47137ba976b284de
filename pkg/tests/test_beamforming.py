import numpy as np
import pytest
from hypothesis import example, given, strategies as st

from passopt.beamforming import min_power_beamformer
from passopt.conic import Status
from passopt.model import sinr
from passopt.oracles import duality_beamformer, min_transmit_power


def _channels(seed, K, M):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(K, M)) + 1j * rng.normal(size=(K, M))


def test_single_user_matched_filter_power():
    g = np.array([[1.0 + 1.0j, 2.0, -0.5j]])
    W, status = min_power_beamformer(g, 0.5, 10.0)
    assert status is Status.OPTIMAL
    assert np.linalg.norm(W) ** 2 == pytest.approx(10.0 * 0.5 / np.linalg.norm(g) ** 2, rel=1e-7)
    assert min_transmit_power(g, 0.5, 10.0) == pytest.approx(np.linalg.norm(W) ** 2, rel=1e-7)


def test_orthogonal_users_decouple():
    G = np.array([[2.0, 0.0], [0.0, 0.5]])
    W, _ = min_power_beamformer(G, [1.0, 2.0], [3.0, 4.0])
    power = np.sum(np.abs(W) ** 2, axis=0)
    np.testing.assert_allclose(power, [3.0 / 4.0, 4.0 * 2.0 / 0.25], rtol=1e-7)


def test_vanishing_target_needs_vanishing_power():
    W, _ = min_power_beamformer(_channels(1, 2, 3), 1.0, 1e-8)
    assert np.linalg.norm(W) ** 2 < 1e-6


def test_rank_deficient_channels_infeasible():
    g = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    W, status = min_power_beamformer(g, 1.0, 10.0)
    assert W is None and status is not Status.OPTIMAL


def test_tiny_physical_channels_are_rescaled():
    G = 1e-5 * _channels(3, 3, 3)
    W, status = min_power_beamformer(G, 1e-11, 24.0)
    assert status is Status.OPTIMAL
    s = sinr(G, np.eye(3), W, 1e-11)
    assert s.min() >= 24.0 * (1 - 1e-6)


@given(st.integers(0, 10_000), st.integers(1, 3), st.floats(0.5, 30.0))
@example(1, 1, 12.324584731951642)     # stalls at the default step length
def test_socp_matches_duality_fixed_point(seed, K, gamma):
    G = _channels(seed, K, 3)
    W, status = min_power_beamformer(G, 1.0, gamma)
    assert status is Status.OPTIMAL
    _, p_ref = duality_beamformer(G, 1.0, gamma)
    assert np.linalg.norm(W) ** 2 == pytest.approx(p_ref, rel=1e-6)
    # targets met with equality at the optimum
    s = sinr(G, np.eye(3), W, 1.0)
    np.testing.assert_allclose(s, gamma, rtol=1e-5)
