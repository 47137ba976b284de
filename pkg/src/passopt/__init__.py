"""Power-minimizing design of pinching-antenna systems with movable antennas.

Continuous antenna positions are optimized by an ADMM loop (:mod:`passopt.admm`),
discrete candidate positions by penalized block coordinate descent
(:mod:`passopt.discrete`); both are audited by :mod:`passopt.model`.
"""
from .admm import AdmmSettings, run
from .baselines import BaselineKind, equal_power_pass, mimo_power_min, transmit_only_pass
from .config import ConfigError, ScenarioConfig, load_config
from .discrete import BcdSettings, build_grid, run_discrete
from .model import MotionModel, Scenario, SystemGeometry, UserSet, audit_feasibility
from .report import SolveReport

__all__ = [
    "AdmmSettings", "BaselineKind", "BcdSettings", "ConfigError", "MotionModel", "Scenario",
    "ScenarioConfig", "SolveReport", "SystemGeometry", "UserSet", "audit_feasibility",
    "build_grid", "equal_power_pass", "load_config", "mimo_power_min", "run", "run_discrete",
    "transmit_only_pass",
]
