"""Comparison schemes, each reported through the same audit and power accounting."""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .admm import AdmmSettings, run
from .beamforming import min_power_beamformer
from .model import Scenario, UserSet, sinr
from .report import SolveReport


class BaselineKind(enum.Enum):
    CONVENTIONAL_MIMO = "conventional-mimo"
    EQUAL_RADIATION_PASS = "equal-radiation-pass"
    TRANSMIT_ONLY_PASS = "transmit-only-pass"


@dataclass(frozen=True, eq=False)
class ArrayGeometry:
    """Fixed antenna positions (M, 3) of a conventional base station."""
    positions: np.ndarray
    f_c: float = 28e9

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float, ndmin=2)
        if pos.shape[1] != 3:
            raise ValueError("array positions must be (M, 3)")
        object.__setattr__(self, "positions", pos)

    @classmethod
    def half_wavelength_line(cls, M: int, h: float, f_c: float = 28e9) -> "ArrayGeometry":
        """M antennas along x, centred on the origin, at height h."""
        lam = 299_792_458.0 / f_c
        x = (np.arange(M) - (M - 1) / 2) * lam / 2
        return cls(np.c_[x, np.zeros(M), np.full(M, h)], f_c)

    def channels(self, user_xy) -> np.ndarray:
        """Free-space LoS channels (K, M) with the same law as the pinching antennas."""
        lam = 299_792_458.0 / self.f_c
        pts = np.atleast_2d(np.asarray(user_xy, dtype=float))[:, :2]
        d = self.positions[None, :, :] - np.c_[pts, np.zeros(len(pts))][:, None, :]
        r = np.linalg.norm(d, axis=2)
        return lam / (4 * np.pi) * np.exp(1j * 2 * np.pi / lam * r) / r


def mimo_power_min(users: UserSet, array: ArrayGeometry, transmit_weight: float = 1.0,
                   tol: float = 1e-9):
    """Min-power beamforming for a fixed array; returns (W, power) or (None, nan).

    ``power`` is ``transmit_weight * sum ||w_k||^2`` so it can be compared with
    the frame-averaged power of the movable-antenna designs.
    """
    G = array.channels(users.positions)
    W, status = min_power_beamformer(G, users.sigma2, users.gamma, tol=tol)
    if W is None:
        return None, float("nan")
    return W, transmit_weight * float(np.sum(np.abs(W) ** 2))


def conventional_mimo(sc: Scenario, array: ArrayGeometry | None = None) -> SolveReport:
    """Wrap :func:`mimo_power_min` in a report, audited on its own channels."""
    array = array or ArrayGeometry.half_wavelength_line(sc.geom.M, sc.geom.h, sc.geom.f_c)
    W, power = mimo_power_min(sc.users, array, sc.motion.transmit_weight)
    rep = SolveReport(status="converged" if W is not None else "qos-infeasible",
                      algorithm=BaselineKind.CONVENTIONAL_MIMO.value)
    rep.counters = {"baseline": 1}
    if W is None:
        return rep
    G = array.channels(sc.users.positions)
    gam = sinr(G, np.eye(G.shape[1]), W, sc.users.sigma2)
    rep.W, rep.power = W, power
    rep.audit = MimoAudit(gam, float(np.max(np.maximum(0.0, 1 - gam / sc.users.gamma))))
    return rep


@dataclass
class MimoAudit:
    sinr: np.ndarray
    sinr_shortfall: float
    tol: float = 1e-6

    @property
    def worst(self) -> float:
        return self.sinr_shortfall

    @property
    def feasible(self) -> bool:
        return self.worst <= self.tol

    def as_dict(self) -> dict:
        return {"sinr_shortfall": self.sinr_shortfall, "feasible": self.feasible}


def equal_power_pass(sc: Scenario, settings: AdmmSettings | None = None) -> SolveReport:
    """Continuous design with every radiation ratio frozen at 1/sqrt(N)."""
    settings = replace(settings or AdmmSettings(), optimize_alpha=False)
    rep = run(sc, settings, algorithm=BaselineKind.EQUAL_RADIATION_PASS.value)
    rep.counters["baseline"] = 1
    return rep


def transmit_only_pass(sc: Scenario, settings: AdmmSettings | None = None) -> SolveReport:
    """Continuous design that ignores motion cost while optimizing.

    The reported power still charges the real motion energy of the final move.
    """
    settings = replace(settings or AdmmSettings(), motion_cost=False)
    rep = run(sc, settings, algorithm=BaselineKind.TRANSMIT_ONLY_PASS.value)
    rep.counters["baseline"] = 1
    return rep


def run_baseline(kind: BaselineKind | str, sc: Scenario, settings: AdmmSettings | None = None,
                 array: ArrayGeometry | None = None) -> SolveReport:
    kind = BaselineKind(kind)
    if kind is BaselineKind.CONVENTIONAL_MIMO:
        return conventional_mimo(sc, array)
    if kind is BaselineKind.EQUAL_RADIATION_PASS:
        return equal_power_pass(sc, settings)
    return transmit_only_pass(sc, settings)
