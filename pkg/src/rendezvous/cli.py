"""Command-line front end.

    rendezvous <command> <scenario.json> [--out DIR] [--seed N]
               [--law per_robot|laplacian_weighted] [--t-end S] [--dt S]

Exit codes: 0 success, 2 validation error, 3 numeric failure, 4 I/O error.
Errors are written to stderr as a single JSON object.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .core import LAW_VARIANTS, diagonal_gains, disagreement
from .matops import NumericalError
from .sim import Scenario, ScenarioError, simulate
from .switching import bound_reentry_time, predict_switches
from .topology import smallest_positive_eigenvalue

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def _eig_json(m: np.ndarray) -> dict:
    ev = np.linalg.eigvals(m)
    order = np.lexsort((ev.imag, ev.real))
    return {"re": ev.real[order].tolist(), "im": ev.imag[order].tolist()}


def _apply_overrides(s: Scenario, args) -> tuple[Scenario, dict]:
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.law is not None:
        changes["law_variant"] = args.law
    if args.t_end is not None:
        changes["t_end"] = args.t_end
    if args.dt is not None:
        changes["dt"] = args.dt
    return (s.replace(**changes) if changes else s), changes


def cmd_gain(s: Scenario, args) -> int:
    law = s.control_law()
    closed = s.model.a - s.model.b @ law.k
    if s.law_variant == "per_robot":
        network = -np.kron(s.topology.laplacian, s.model.b @ law.k)
    else:
        network = -np.kron(s.topology.laplacian @ s.topology.laplacian, s.model.b @ law.k)
    network += np.kron(np.eye(s.n), s.model.a)
    try:
        lam = smallest_positive_eigenvalue(s.topology.laplacian)
    except ValueError:
        lam = None
    out = {
        "P": law.p.tolist(),
        "K": law.k.tolist(),
        "care_residual": law.care.residual_norm,
        "care_iterations": law.care.iterations,
        "robot_closed_loop_eigenvalues": _eig_json(closed),
        "network_closed_loop_eigenvalues": _eig_json(network),
        "lambda_min_positive": lam,
    }
    print(json.dumps(out, indent=2))
    return EXIT_OK


def _run_one(s: Scenario, out_dir: Path, overrides: dict) -> dict:
    log = simulate(s)
    csv_path = io.export_csv(log, out_dir / f"{s.name}.csv")
    report = io.build_report(s, log, overrides)
    report_path = io.write_json(report, out_dir / f"{s.name}.report.json")
    return {"csv": str(csv_path), "report": str(report_path),
            "consensus_time": report["consensus_time"], "J_total": report["J_total"]}


def cmd_simulate(s: Scenario, args, overrides: dict) -> int:
    print(json.dumps(_run_one(s, Path(args.out), overrides), indent=2))
    return EXIT_OK


def cmd_switching(s: Scenario, args) -> int:
    law = s.control_law()
    _, k_diag = diagonal_gains(law)
    eps0 = disagreement(s.topology, s.x0)
    rows = []
    for p in predict_switches(k_diag, eps0, law.u_min, law.u_max):
        d = p.to_dict()
        i, a = p.robot_index, p.axis_index
        bound = (law.u_max if p.bound_side == "upper" else law.u_min)[i, a]
        d["t_reentry"] = bound_reentry_time(k_diag[a], eps0[i, a], bound)
        rows.append(d)
    print(json.dumps(rows, indent=2))
    return EXIT_OK


def _sweep_cell(payload):
    s, out_dir, overrides = payload
    return _run_one(s, out_dir, overrides)


def cmd_sweep(s: Scenario, args, overrides: dict) -> int:
    out_dir = Path(args.out)
    cells = []
    for q in args.q:
        for r in args.r:
            cell = s.replace(q=q * np.eye(s.model.m), r=r * np.eye(s.model.r),
                             name=f"{s.name}_q{q:g}_r{r:g}")
            cells.append((q, r, cell))
    payloads = [(c, out_dir, {**overrides, "q": q, "r": r}) for q, r, c in cells]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_cell, payloads))
    else:
        results = [_sweep_cell(p) for p in payloads]
    index = [{"q": q, "r": r, **res} for (q, r, _), res in zip(cells, results)]
    path = io.write_json({"scenario": s.name, "cells": index}, out_dir / f"{s.name}.sweep_index.json")
    print(json.dumps({"index": str(path), "cells": len(index)}, indent=2))
    return EXIT_OK


def cmd_report(s: Scenario, args, overrides: dict) -> int:
    csv_path = Path(args.csv) if args.csv else Path(args.out) / f"{s.name}.csv"
    log = io.read_csv(csv_path, s)
    report = io.build_report(s, log, overrides)
    path = io.write_json(report, Path(args.out) / f"{s.name}.report.json")
    print(json.dumps({"report": str(path), "J_total": report["J_total"],
                      "consensus_time": report["consensus_time"]}, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rendezvous", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("scenario", help="scenario JSON file, or the name of a shipped scenario")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--seed", type=int)
        p.add_argument("--law", choices=LAW_VARIANTS)
        p.add_argument("--t-end", type=float, dest="t_end")
        p.add_argument("--dt", type=float)
        return p

    common(sub.add_parser("gain", help="print P, K and closed-loop eigenvalues"))
    common(sub.add_parser("simulate", help="run a scenario; write CSV and report"))
    common(sub.add_parser("switching", help="predict switching times of initially saturated robots"))
    sw = common(sub.add_parser("sweep", help="grid over scalar Q, R multipliers"))
    sw.add_argument("--q", type=float, nargs="+", default=[1.0, 3.0, 20.0])
    sw.add_argument("--r", type=float, nargs="+", default=[1.0, 5.0])
    sw.add_argument("--jobs", type=int, default=1)
    rp = common(sub.add_parser("report", help="re-derive a report from an exported CSV"))
    rp.add_argument("--csv", help="trajectory CSV (default: OUT/<name>.csv)")
    return parser


def _resolve(path: str) -> Path:
    p = Path(path)
    if not p.exists():
        shipped = io.shipped_scenarios()
        if p.stem in shipped and p.parent == Path("."):
            return shipped[p.stem]
    return p


def _fail(code: int, kind: str, message: str, **extra) -> int:
    print(json.dumps({"error": kind, "message": message, **extra}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        s = io.load_scenario(_resolve(args.scenario))
        s, overrides = _apply_overrides(s, args)
        if args.command == "gain":
            return cmd_gain(s, args)
        if args.command == "simulate":
            return cmd_simulate(s, args, overrides)
        if args.command == "switching":
            return cmd_switching(s, args)
        if args.command == "sweep":
            return cmd_sweep(s, args, overrides)
        return cmd_report(s, args, overrides)
    except ScenarioError as exc:
        return _fail(EXIT_VALIDATION, "validation", str(exc),
                     errors=[{"path": p, "message": m} for p, m in exc.errors])
    except NumericalError as exc:
        return _fail(EXIT_NUMERIC, "numeric", str(exc))
    except OSError as exc:
        return _fail(EXIT_IO, "io", str(exc), path=getattr(exc, "filename", None))
    except ValueError as exc:
        return _fail(EXIT_VALIDATION, "validation", str(exc), errors=[])


if __name__ == "__main__":
    sys.exit(main())
