"""Single runs, parameter sweeps over seeded user drops, and deterministic emission."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .admm import run as run_continuous
from .baselines import ArrayGeometry, BaselineKind, run_baseline
from .config import ScenarioConfig, with_axis
from .discrete import build_grid, run_discrete
from .model import MotionModel, Scenario, SystemGeometry, UserSet, dbm_to_watts, watts_to_dbm
from .report import SolveReport

ROW_COLUMNS = ("axis", "value", "drop", "algorithm", "status", "feasible",
               "power_w", "power_dbm", "iterations", "max_violation")
SUMMARY_COLUMNS = ("axis", "value", "algorithm", "runs", "feasible_runs",
                   "mean_power_w", "mean_power_dbm")


def solve(cfg: ScenarioConfig, algorithm: str | None = None, drop: int = 0,
          incumbent: SolveReport | None = None) -> SolveReport:
    """Run one algorithm on one drop of ``cfg``."""
    algorithm = algorithm or cfg.algorithm
    sc = cfg.scenario(drop)
    if algorithm == "continuous":
        return run_continuous(sc, cfg.admm_settings())
    if algorithm == "discrete":
        grid = build_grid(sc, cfg.grid.N_tilde, cfg.grid.spacing_mode)
        return run_discrete(sc, grid, cfg.bcd_settings(), incumbent=incumbent)
    kind = BaselineKind(algorithm.removeprefix("baseline-"))
    array = None
    if cfg.mimo_positions is not None:
        array = ArrayGeometry(np.asarray(cfg.mimo_positions), cfg.geometry.f_c)
    return run_baseline(kind, sc, cfg.admm_settings(), array)


@dataclass
class Row:
    axis: str
    value: float
    drop: int
    algorithm: str
    status: str
    feasible: bool
    power_w: float
    iterations: int
    max_violation: float

    @classmethod
    def from_report(cls, axis, value, drop, algorithm, rep: SolveReport) -> "Row":
        ok = rep.feasible and math.isfinite(rep.power)
        status = rep.status if ok or rep.status != "converged" else "infeasible"
        worst = rep.audit.worst if rep.audit is not None else float("nan")
        return cls(axis, float(value), drop, algorithm, status, ok,
                   rep.power if ok else float("nan"), rep.iterations, float(worst))

    def as_list(self):
        dbm = watts_to_dbm(self.power_w) if self.feasible else float("nan")
        return [self.axis, _num(self.value), self.drop, self.algorithm, self.status,
                int(self.feasible), _num(self.power_w), _num(dbm), self.iterations,
                _num(self.max_violation)]


def _num(x) -> str:
    """Fixed text for floats so equal inputs give equal bytes; NaN is left empty."""
    x = float(x)
    return "" if not math.isfinite(x) else repr(x)


def _drop_task(args):
    cfg, axis, values, drop, algorithms = args
    rows, details = [], []
    incumbent = None
    for value in values:
        c = with_axis(cfg, axis, value)
        for algo in algorithms:
            try:
                chain = incumbent if (algo == "discrete" and axis == "grid_density") else None
                rep = solve(c, algo, drop, incumbent=chain)
            except Exception as exc:          # a failed run is a row, never an aborted sweep
                rep = SolveReport(status=f"error-{type(exc).__name__}", algorithm=algo)
            if algo == "discrete" and axis == "grid_density" and rep.feasible:
                incumbent = rep
            rows.append(Row.from_report(axis, value, drop, algo, rep))
            details.append(record(rep, axis=axis, value=value, drop=drop))
    return rows, details


def sweep(cfg: ScenarioConfig, axis: str | None = None, values=None, drops_per_point: int | None = None,
          algorithms=None, workers: int = 1):
    """Run every (value, drop, algorithm); returns (rows, details).

    Drops run independently (in parallel when ``workers`` > 1). Within a drop
    a grid-density sweep visits values in increasing order and hands each
    discrete result to the next, denser grid as an incumbent.
    """
    axis = axis or cfg.sweep.axis
    values = list(cfg.sweep.values if values is None else values)
    if not values:
        raise ValueError("values must be non-empty")
    if axis == "grid_density":
        values = sorted(values)
    drops = cfg.sweep.drops_per_point if drops_per_point is None else drops_per_point
    algorithms = list(algorithms or cfg.sweep.algorithms)
    tasks = [(cfg, axis, values, d, algorithms) for d in range(drops)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_drop_task, tasks))
    else:
        results = [_drop_task(t) for t in tasks]
    rows = [r for res in results for r in res[0]]
    details = [d for res in results for d in res[1]]
    order = {(v, a): i for i, (v, a) in enumerate((v, a) for v in values for a in algorithms)}
    key = sorted(range(len(rows)), key=lambda i: (order[(rows[i].value, rows[i].algorithm)], rows[i].drop))
    return [rows[i] for i in key], [details[i] for i in key]


def summarize(rows):
    """Mean over feasible drops per (axis, value, algorithm).

    Powers are averaged in dBm (as plotted) and in watts separately.
    """
    groups: dict = {}
    for r in rows:
        groups.setdefault((r.axis, r.value, r.algorithm), []).append(r)
    out = []
    for (axis, value, algo), rs in groups.items():
        ok = [r.power_w for r in rs if r.feasible]
        mw = float(np.mean(ok)) if ok else float("nan")
        md = float(np.mean(watts_to_dbm(np.array(ok)))) if ok else float("nan")
        out.append({"axis": axis, "value": value, "algorithm": algo, "runs": len(rs),
                    "feasible_runs": len(ok), "mean_power_w": mw, "mean_power_dbm": md})
    return out


def record(rep: SolveReport, **meta) -> dict:
    """Key/value view of one run; wall times are left out so output is reproducible."""
    def arr(a):
        if a is None:
            return None
        a = np.asarray(a)
        if np.iscomplexobj(a):
            return {"re": a.real.tolist(), "im": a.imag.tolist()}
        return a.tolist()

    ok = rep.feasible and math.isfinite(rep.power)
    return {
        **{k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in meta.items()},
        "algorithm": rep.algorithm,
        "status": rep.status,
        "feasible": bool(rep.feasible),
        "power_w": rep.power if ok else None,
        "power_dbm": float(watts_to_dbm(rep.power)) if ok else None,
        "iterations": rep.iterations,
        "history": [{"iteration": h.iteration, "objective": h.objective, "residual": h.residual,
                     "max_violation": h.max_violation} for h in rep.history],
        "X": arr(rep.X), "alpha": arr(rep.alpha), "W": arr(rep.W), "z": arr(rep.z),
        "audit": rep.audit.as_dict() if rep.audit is not None else None,
        "counters": rep.counters,
        "oracle": rep.oracle,
    }


def rows_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROW_COLUMNS)
    for r in rows:
        w.writerow(r.as_list())
    return buf.getvalue()


def summary_csv(summary) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for s in summary:
        w.writerow([s["axis"], _num(s["value"]), s["algorithm"], s["runs"], s["feasible_runs"],
                    _num(s["mean_power_w"]), _num(s["mean_power_dbm"])])
    return buf.getvalue()


def records_json(records) -> str:
    def clean(o):
        if isinstance(o, float) and not math.isfinite(o):
            return None
        if isinstance(o, dict):
            return {str(k): clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        if isinstance(o, np.generic):
            return clean(o.item())
        return o
    return json.dumps(clean(records), indent=1, sort_keys=True) + "\n"


def emit(text: str, path: str | Path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    return path


# ---------------------------------------------------------------- oracle scenarios

def scalar_scenario(seed: int, P_motor: float = 0.1, v: float = 1.0, D: float = 40.0,
                    h: float = 5.0) -> Scenario:
    """One waveguide on y = 0 with one antenna and one user, all drawn from ``seed``."""
    rng = np.random.Generator(np.random.PCG64([int(seed), 1]))
    geom = SystemGeometry(1, 1, 1, D, h, (0.0,))
    x0 = rng.uniform(0.0, D)
    user = np.c_[rng.uniform(0.0, D), rng.uniform(-D / 2, D / 2)]
    motion = MotionModel(P_motor, v, 0.1, 0.9, [[x0]])
    return Scenario(geom, motion, UserSet(user, dbm_to_watts(-80.0), 24.0))


TINY_SHAPES = ((1, 1, 1), (1, 2, 1), (2, 1, 1), (2, 1, 2))


def tiny_scenario(seed: int, P_motor: float = 0.1, v: float = 1.0):
    """Small instance for exhaustive comparison; returns (scenario, N_tilde).

    Shapes cycle through (M, N, K) in TINY_SHAPES, so M*N <= 2 and K <= 2;
    N_tilde is drawn from {3, 4, 5}.
    """
    rng = np.random.Generator(np.random.PCG64([int(seed), 2]))
    M, N, K = TINY_SHAPES[seed % len(TINY_SHAPES)]
    D = 40.0
    ys = (-5.0, 5.0)[:M] if M == 2 else (0.0,)
    geom = SystemGeometry(M, N, K, D, 5.0, ys)
    start = rng.uniform(5.0, D - 5.0, size=(M, 1))
    X0 = start + np.arange(N)[None, :] * rng.uniform(1.0, 3.0)
    users = np.c_[rng.uniform(0.0, D, K), rng.uniform(-D / 2, D / 2, K)]
    motion = MotionModel(P_motor, v, 0.1, 0.9, X0)
    Nt = int(rng.integers(3, 6))
    return Scenario(geom, motion, UserSet(users, dbm_to_watts(-80.0), 24.0)), Nt
