"""Solver output shared by every pipeline."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import watts_to_dbm


@dataclass
class IterRecord:
    iteration: int
    objective: float
    residual: float
    max_violation: float
    wall_time: float


@dataclass
class SolveReport:
    status: str
    algorithm: str
    history: list = field(default_factory=list)
    X: np.ndarray | None = None
    alpha: np.ndarray | None = None
    W: np.ndarray | None = None
    z: np.ndarray | None = None
    power: float = float("nan")
    audit: object = None
    counters: dict = field(default_factory=dict)
    oracle: dict = field(default_factory=dict)
    state: object = None

    @property
    def iterations(self) -> int:
        return len(self.history)

    @property
    def power_dbm(self) -> float:
        return float(watts_to_dbm(self.power)) if np.isfinite(self.power) and self.power > 0 else float("nan")

    @property
    def feasible(self) -> bool:
        return self.audit is not None and self.audit.feasible

    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.history])

    def residuals(self) -> np.ndarray:
        return np.array([r.residual for r in self.history])
