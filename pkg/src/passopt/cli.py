"""Command line: run, sweep, oracle and audit verbs.

Exit codes: 0 success, 1 a run failed or an oracle check missed, 2 bad input.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .config import ALGORITHMS, AXES, ConfigError, load_config
from .experiments import (Row, emit, record, records_json, rows_csv, scalar_scenario, solve,
                          summarize, summary_csv, sweep, tiny_scenario)


def _common(p):
    p.add_argument("--config", type=Path, help="YAML scenario file (defaults if omitted)")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--format", choices=("table", "records"), default="table")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="passopt", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("run", help="solve one scenario")
    _common(p)
    p.add_argument("--algo", choices=ALGORITHMS)
    p.add_argument("--drop", type=int, default=0, help="user drop index")

    p = sub.add_parser("sweep", help="sweep one axis over seeded drops")
    _common(p)
    p.add_argument("--algo", action="append", choices=ALGORITHMS,
                   help="algorithm to include (repeatable)")
    p.add_argument("--axis", choices=AXES)
    p.add_argument("--values", type=float, nargs="+")
    p.add_argument("--drops", type=int, help="drops per point")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("oracle", help="compare the optimizers with brute-force references")
    _common(p)
    p.add_argument("--count", type=int, default=20, help="scenarios per check")
    p.add_argument("--ratio", type=float, default=1.05)

    p = sub.add_parser("audit", help="re-audit designs saved by 'run --format records'")
    _common(p)
    p.add_argument("design", type=Path)
    return ap


def _config(args):
    cfg = load_config(args.config)
    upd = {}
    if args.seed is not None:
        upd["seed"] = args.seed
    if args.out is not None:
        upd["out"] = str(args.out)
    return cfg.model_copy(update=upd) if upd else cfg


def cmd_run(args) -> int:
    cfg = _config(args)
    algo = args.algo or cfg.algorithm
    rep = solve(cfg, algo, args.drop)
    out = Path(cfg.out)
    if args.format == "records":
        text = records_json([record(rep, drop=args.drop, seed=cfg.seed)])
        path = emit(text, out / "run.json")
    else:
        text = rows_csv([Row.from_report("none", 0.0, args.drop, algo, rep)])
        path = emit(text, out / "run.csv")
    sys.stdout.write(text)
    print(f"wrote {path}", file=sys.stderr)
    return 0 if rep.feasible else 1


def cmd_sweep(args) -> int:
    cfg = _config(args)
    axis = args.axis or cfg.sweep.axis
    rows, details = sweep(cfg, axis, args.values, args.drops, args.algo, workers=args.workers)
    out = Path(cfg.out)
    emit(rows_csv(rows), out / f"sweep_{axis}.csv")
    summary = summary_csv(summarize(rows))
    emit(summary, out / f"sweep_{axis}_summary.csv")
    if args.format == "records":
        emit(records_json(details), out / f"sweep_{axis}.json")
    sys.stdout.write(summary)
    return 0


def cmd_oracle(args) -> int:
    from .discrete import build_grid, run_discrete
    from .admm import run as run_continuous
    from .oracles import exhaustive_discrete_oracle, grid_oracle_1d

    cfg = _config(args)
    worst = {"continuous": 0.0, "discrete": 0.0}
    lines = []
    for i in range(args.count):
        sc = scalar_scenario(cfg.seed * 1000 + i)
        t0 = time.perf_counter()
        rep = run_continuous(sc, cfg.admm_settings())
        dt = time.perf_counter() - t0
        _, p_star = grid_oracle_1d(sc)
        r = rep.power / p_star if rep.feasible else float("inf")
        worst["continuous"] = max(worst["continuous"], r)
        lines.append(f"continuous {i:3d} ratio {r:.6f} time {dt:.2f}s")
        sc, Nt = tiny_scenario(cfg.seed * 1000 + i)
        grid = build_grid(sc, Nt)
        rep = run_discrete(sc, grid, cfg.bcd_settings())
        opt = exhaustive_discrete_oracle(sc, grid)
        r = rep.power / opt.power if rep.feasible else float("inf")
        worst["discrete"] = max(worst["discrete"], r)
        lines.append(f"discrete   {i:3d} ratio {r:.6f} shape {sc.geom.M}x{sc.geom.N}x{sc.geom.K} grid {Nt}")
    text = "\n".join(lines) + "\n"
    ok = all(v <= args.ratio for v in worst.values())
    text += "".join(f"worst {k} ratio {v:.6f}\n" for k, v in worst.items())
    emit(text, Path(cfg.out) / "oracle.txt")
    sys.stdout.write(text)
    return 0 if ok else 1


def cmd_audit(args) -> int:
    cfg = _config(args)
    try:
        data = json.loads(args.design.read_text())
    except OSError as exc:
        raise ConfigError(f"{args.design}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.design}: not valid JSON ({exc})") from None
    recs = data if isinstance(data, list) else [data]
    bad = 0
    for i, rec in enumerate(recs):
        if rec.get("X") is None or rec.get("W") is None:
            print(f"{i}: no design ({rec.get('status')})")
            bad += 1
            continue
        sc = cfg.scenario(int(rec.get("drop", 0)))
        W = np.asarray(rec["W"]["re"]) + 1j * np.asarray(rec["W"]["im"])
        audit = sc.audit(np.asarray(rec["X"]), np.asarray(rec["alpha"]), W)
        print(f"{i}: feasible={audit.feasible} worst={audit.worst:.3e} "
              + " ".join(f"{k}={v:.3e}" for k, v in audit.as_dict().items() if k != "feasible"))
        bad += not audit.feasible
    return 0 if bad == 0 else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": cmd_run, "sweep": cmd_sweep, "oracle": cmd_oracle, "audit": cmd_audit}[args.verb]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
