"""Scenario files, trajectory CSVs and run reports.

Scenario documents are JSON. Matrices are nested arrays; ``q`` and ``r`` may
be scalars (multiplying the identity); bounds may be ``null`` (unbounded), a
scalar, one scalar per robot, or one vector per robot. See the README for the
full schema.
"""

from __future__ import annotations

import csv
import datetime as _dt
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .core import PER_ROBOT, RobotModel
from .network import NetworkModel
from .sim import Scenario, ScenarioError, TrajectoryLog, finalize_log
from .topology import Topology, smallest_positive_eigenvalue

CSV_HEADER = ["t", "robot", "axis", "x", "u_raw", "u_applied", "saturated",
              "V_quad", "V_sat", "J_cum", "Ji_cum"]

REQUIRED = ("n", "model", "adjacency", "x0", "q", "r", "bounds")
OPTIONAL = {
    "control_period": 0.1,
    "dt": 0.01,
    "t_end": 20.0,
    "consensus_tol": 1e-3,
    "seed": 0,
    "law_variant": PER_ROBOT,
}


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _matrix_errors(value, path, rows=None, cols=None):
    """Shape/type problems of a nested-array matrix."""
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        return [(path, "must be a non-empty array of arrays")]
    errs = []
    width = len(value[0])
    for i, row in enumerate(value):
        if len(row) != width:
            errs.append((f"{path}/{i}", f"row length {len(row)} differs from {width}"))
        for j, v in enumerate(row):
            if not _is_number(v):
                errs.append((f"{path}/{i}/{j}", "must be a finite number"))
    if rows is not None and len(value) != rows:
        errs.append((path, f"expected {rows} rows, got {len(value)}"))
    if cols is not None and width != cols:
        errs.append((path, f"expected {cols} columns, got {width}"))
    return errs


def _bound_errors(value, path):
    if value is None or _is_number(value):
        return []
    if isinstance(value, list):
        errs = []
        for i, v in enumerate(value):
            if isinstance(v, list):
                errs += [(f"{path}/{i}/{j}", "must be a finite number")
                         for j, w in enumerate(v) if not _is_number(w)]
            elif not _is_number(v):
                errs.append((f"{path}/{i}", "must be a number or an array of numbers"))
        return errs
    return [(path, "must be null, a number, or an array")]


def parse_scenario(doc: dict, name: str = "") -> Scenario:
    """Validate a decoded scenario document; raises ``ScenarioError`` with every problem found."""
    if not isinstance(doc, dict):
        raise ScenarioError([("", "scenario must be a JSON object")])
    errs = [(f"/{k}", "required field missing") for k in REQUIRED if k not in doc]
    known = set(REQUIRED) | set(OPTIONAL) | {"network", "name", "description"}
    errs += [(f"/{k}", "unknown field") for k in doc if k not in known]

    n = doc.get("n")
    if "n" in doc and not (isinstance(n, int) and not isinstance(n, bool) and n >= 1):
        errs.append(("/n", "must be a positive integer"))
        n = None

    model = None
    mdoc = doc.get("model")
    if "model" in doc:
        if not isinstance(mdoc, dict) or "a" not in mdoc or "b" not in mdoc:
            errs.append(("/model", "must be an object with 'a' and 'b'"))
        else:
            merr = _matrix_errors(mdoc["a"], "/model/a") + _matrix_errors(mdoc["b"], "/model/b")
            errs += merr
            if not merr:
                try:
                    model = RobotModel(mdoc["a"], mdoc["b"])
                except ValueError as exc:
                    errs.append(("/model", str(exc)))

    topology = None
    if "adjacency" in doc:
        adj = doc["adjacency"]
        aerr = _matrix_errors(adj, "/adjacency", rows=n, cols=n)
        if not aerr:
            for i, row in enumerate(adj):
                for j, v in enumerate(row):
                    if v < 0:
                        aerr.append((f"/adjacency/{i}/{j}", "weight must be nonnegative"))
                    elif i == j and v != 0:
                        aerr.append((f"/adjacency/{i}/{j}", "diagonal entry must be zero"))
        errs += aerr
        if not aerr and len(adj) == len(adj[0]):
            topology = Topology(adj)
    if topology is None and n is not None:
        # Stand-in graph so the remaining fields are still checked; the
        # adjacency errors above already guarantee this scenario is rejected.
        topology = Topology(np.zeros((n, n)))

    for key in ("q", "r"):
        if key in doc and not _is_number(doc[key]):
            errs += _matrix_errors(doc[key], f"/{key}")

    if "x0" in doc:
        x0 = doc["x0"]
        if not isinstance(x0, list) or not x0:
            errs.append(("/x0", "must be a non-empty array"))
        else:
            for i, v in enumerate(x0):
                if isinstance(v, list):
                    errs += [(f"/x0/{i}/{j}", "must be a finite number")
                             for j, w in enumerate(v) if not _is_number(w)]
                elif not _is_number(v):
                    errs.append((f"/x0/{i}", "must be a number or an array of numbers"))

    bdoc = doc.get("bounds")
    if "bounds" in doc:
        if not isinstance(bdoc, dict):
            errs.append(("/bounds", "must be an object with 'u_min' and 'u_max'"))
            bdoc = None
        else:
            for side in ("u_min", "u_max"):
                errs += _bound_errors(bdoc.get(side), f"/bounds/{side}")

    kwargs = {}
    for key, default in OPTIONAL.items():
        v = doc.get(key, default)
        if key == "law_variant":
            if not isinstance(v, str):
                errs.append((f"/{key}", "must be a string"))
        elif key == "seed":
            if not (isinstance(v, int) and not isinstance(v, bool) and v >= 0):
                errs.append((f"/{key}", "must be a nonnegative integer"))
        elif not _is_number(v):
            errs.append((f"/{key}", "must be a finite number"))
        kwargs[key] = v

    ndoc = doc.get("network", {})
    network = None
    if not isinstance(ndoc, dict):
        errs.append(("/network", "must be an object"))
    else:
        unknown = set(ndoc) - {"delay_periods", "drop_probability", "sensor_noise_std"}
        errs += [(f"/network/{k}", "unknown field") for k in sorted(unknown)]
        noise = ndoc.get("sensor_noise_std", 0.0)
        if not _is_number(noise):
            errs.append(("/network/sensor_noise_std", "must be a finite number"))
        else:
            network = NetworkModel(ndoc.get("delay_periods", 0),
                                   ndoc.get("drop_probability", 0.0), float(noise))

    scenario = None
    if model is not None and topology is not None and network is not None and bdoc is not None \
            and all(k in doc for k in REQUIRED):
        try:
            scenario = Scenario(
                model=model, topology=topology, x0=doc["x0"], q=doc["q"], r=doc["r"],
                u_min=bdoc.get("u_min"), u_max=bdoc.get("u_max"), network=network,
                name=str(doc.get("name", name)), **kwargs)
        except ScenarioError as exc:
            errs += [e for e in exc.errors if e not in errs]
        except (TypeError, ValueError) as exc:
            errs.append(("", str(exc)))
    if errs or scenario is None:
        raise ScenarioError(errs or [("", "invalid scenario")])
    return scenario


def shipped_scenarios() -> dict[str, Path]:
    """Scenario files bundled with the package, by stem."""
    root = Path(__file__).parent / "scenarios"
    return {p.stem: p for p in sorted(root.glob("*.json"))}


def load_scenario(path) -> Scenario:
    """Read and validate a scenario file."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError([("", f"JSON parse error at line {exc.lineno} column {exc.colno}: {exc.msg}")]) from exc
    return parse_scenario(doc, name=path.stem)


def _bound_to_json(b: np.ndarray):
    return [[None if math.isinf(v) else float(v) for v in row] for row in b]


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "name": s.name,
        "n": s.n,
        "model": {"a": s.model.a.tolist(), "b": s.model.b.tolist()},
        "adjacency": s.topology.adjacency.tolist(),
        "x0": s.x0.tolist(),
        "q": s.q.tolist(),
        "r": s.r.tolist(),
        "bounds": {"u_min": _bound_to_json(s.u_min), "u_max": _bound_to_json(s.u_max)},
        "control_period": s.control_period,
        "dt": s.dt,
        "t_end": s.t_end,
        "consensus_tol": s.consensus_tol,
        "network": {
            "delay_periods": np.asarray(s.network.delay_periods).tolist(),
            "drop_probability": np.asarray(s.network.drop_probability).tolist(),
            "sensor_noise_std": s.network.sensor_noise_std,
        },
        "seed": s.seed,
        "law_variant": s.law_variant,
    }


def _g(v) -> str:
    return format(float(v), ".9g")


def export_csv(log: TrajectoryLog, path) -> Path:
    """One row per (sample, robot, axis); floats to 9 significant digits."""
    path = Path(path)
    _, n, m = log.x.shape
    if log.u.shape[2] != m:
        raise ValueError("CSV export needs as many inputs as states per robot")
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for k in range(len(log.t)):
            t, vq, vs, jc = _g(log.t[k]), _g(log.v_quad[k]), _g(log.v_sat[k]), _g(log.j_cum[k])
            for i in range(n):
                ji = _g(log.ji_cum[k, i])
                for a in range(m):
                    w.writerow([t, i, a, _g(log.x[k, i, a]), _g(log.u_raw[k, i, a]),
                                _g(log.u[k, i, a]), int(log.saturated[k, i, a]),
                                vq, vs, jc, ji])
    return path


def read_csv(path, scenario: Scenario) -> TrajectoryLog:
    """Rebuild a log from an exported CSV, re-deriving every derived quantity."""
    path = Path(path)
    n, m = scenario.n, scenario.model.m
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = [r for r in reader]
    if len(rows) % (n * m):
        raise ValueError(f"{path}: {len(rows)} rows is not a multiple of {n}x{m}")
    data = np.array([[float(r[0]), float(r[3]), float(r[4]), float(r[5])] for r in rows])
    data = data.reshape(-1, n, m, 4)
    t = data[:, 0, 0, 0]
    law = scenario.control_law()
    return finalize_log(scenario, law, t, data[..., 1], data[..., 2], data[..., 3])


def _jsonable(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def build_report(s: Scenario, log: TrajectoryLog, overrides: dict | None = None) -> dict:
    """Summary of one run; a pure function of the scenario and log apart from ``generated_at``."""
    final = log.x[-1]
    try:
        lam = smallest_positive_eigenvalue(s.topology.laplacian)
    except ValueError:
        lam = None
    v0 = float(log.v_quad[0])
    j = log.j_total
    reentry = {(e["robot_index"], e["axis_index"]): e["t_reentry"] for e in log.reentry_times}
    preds = []
    for p in log.predictions:
        d = p.to_dict()
        d["t_reentry"] = _jsonable(reentry.get((p.robot_index, p.axis_index)))
        preds.append(d)
    return {
        "artifact": {"name": "rendezvous", "version": __version__},
        "scenario": scenario_to_dict(s),
        "overrides": overrides or {},
        "consensus_time": log.consensus_time,
        "final_positions": final.tolist(),
        "agreement_value": final.mean(axis=0).tolist() if log.consensus_time is not None else None,
        "J_total": j,
        "J_state": log.j_state,
        "J_effort": log.j_effort,
        "effort_share": log.j_effort / j if j > 0 else None,
        "J_per_robot": log.ji_cum[-1].tolist(),
        "V0": v0,
        "J_over_V0": j / v0 if v0 > 0 else None,
        "lambda_min_positive": lam,
        "switch_predictions": preds,
        "regime_events": [e.to_dict() for e in log.events],
        "generated_at": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }


def write_json(obj, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")
    return path
