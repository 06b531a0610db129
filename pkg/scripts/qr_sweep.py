"""Consensus time, cost split and saturation activity over a grid of Q, R weights.

    python scripts/qr_sweep.py [--scenario base_q3_r1] [--q 1 3 6 20] [--r 1 5] [--out out/qr_sweep.json]
"""

import argparse
import json
from pathlib import Path

import numpy as np

from rendezvous.io import load_scenario, shipped_scenarios
from rendezvous.sim import simulate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default="base_q3_r1")
    ap.add_argument("--q", type=float, nargs="+", default=[1, 3, 6, 20])
    ap.add_argument("--r", type=float, nargs="+", default=[1, 5])
    ap.add_argument("--out", default="out/qr_sweep.json")
    args = ap.parse_args()

    base = load_scenario(shipped_scenarios()[args.scenario])
    m, r_dim = base.model.m, base.model.r
    rows = []
    print(f"{'Q':>5} {'R':>5} {'t_cons':>8} {'J':>9} {'effort':>7} {'sat_ticks':>9}")
    for q in args.q:
        for r in args.r:
            s = base.replace(q=q * np.eye(m), r=r * np.eye(r_dim))
            log = simulate(s)
            ticks = slice(None, None, int(round(s.control_period / s.dt)))
            sat_ticks = int(log.saturated[ticks].any(axis=(1, 2)).sum())
            row = {"q": q, "r": r, "consensus_time": log.consensus_time,
                   "J_total": log.j_total, "effort_share": log.j_effort / log.j_total,
                   "saturated_ticks": sat_ticks}
            rows.append(row)
            ct = "-" if log.consensus_time is None else f"{log.consensus_time:.2f}"
            print(f"{q:5g} {r:5g} {ct:>8} {log.j_total:9.5f} {row['effort_share']:7.3f} {sat_ticks:9d}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps({"scenario": args.scenario, "rows": rows}, indent=2) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
