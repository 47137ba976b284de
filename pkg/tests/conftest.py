import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from passopt.model import MotionModel, Scenario, SystemGeometry, UserSet, dbm_to_watts

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

warnings.filterwarnings("ignore", category=FutureWarning)


def default_scenario(seed=0, P=0.1, v=1.0, gamma=24.0):
    geom = SystemGeometry(3, 4, 3, 40.0, 5.0, (-15.0, 0.0, 15.0))
    motion = MotionModel(P, v, 0.1, 0.9, np.tile([8.0, 16.0, 24.0, 32.0], (3, 1)))
    rng = np.random.default_rng(seed)
    users = np.c_[rng.uniform(0, 40, 3), rng.uniform(-20, 20, 3)]
    return Scenario(geom, motion, UserSet(users, dbm_to_watts(-80.0), gamma))


def small_scenario(M=1, N=2, K=1, seed=0, P=0.1, v=1.0, gamma=24.0):
    rng = np.random.default_rng(seed)
    ys = tuple(np.linspace(-5.0, 5.0, M)) if M > 1 else (0.0,)
    geom = SystemGeometry(M, N, K, 40.0, 5.0, ys)
    X0 = rng.uniform(5.0, 30.0, size=(M, 1)) + 2.0 * np.arange(N)
    users = np.c_[rng.uniform(0, 40, K), rng.uniform(-20, 20, K)]
    return Scenario(geom, MotionModel(P, v, 0.1, 0.9, X0), UserSet(users, dbm_to_watts(-80.0), gamma))


@pytest.fixture
def sc_default():
    return default_scenario(0)


@pytest.fixture
def sc_small():
    return small_scenario()


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
