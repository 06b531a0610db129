"""Final disagreement under delay / packet loss / sensor noise, averaged over seeds.

    python scripts/network_robustness.py [--scenario base_q3_r1] [--seeds 10]
"""

import argparse
import json
from pathlib import Path

import numpy as np

from rendezvous.io import load_scenario, shipped_scenarios
from rendezvous.network import NetworkModel
from rendezvous.sim import max_pairwise_distance, simulate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default="base_q3_r1")
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--delays", type=int, nargs="+", default=[0, 1, 2, 4])
    ap.add_argument("--drops", type=float, nargs="+", default=[0.0, 0.1, 0.2, 0.4])
    ap.add_argument("--noise", type=float, default=1e-3)
    ap.add_argument("--threshold", type=float, default=5e-3)
    ap.add_argument("--out", default="out/network_robustness.json")
    args = ap.parse_args()

    base = load_scenario(shipped_scenarios()[args.scenario])
    rows = []
    print(f"{'delay':>5} {'drop':>5} {'median spread':>14} {'hits':>6}")
    for delay in args.delays:
        for drop in args.drops:
            net = NetworkModel(delay, drop, args.noise)
            spreads = [max_pairwise_distance(simulate(base.replace(network=net, seed=seed)).x[-1])
                       for seed in range(args.seeds)]
            hits = int(np.sum(np.array(spreads) < args.threshold))
            rows.append({"delay": delay, "drop": drop, "noise": args.noise,
                         "spreads": spreads, "hits": hits})
            print(f"{delay:5d} {drop:5.2f} {np.median(spreads):14.2e} {hits:3d}/{args.seeds}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps({"scenario": args.scenario, "rows": rows}, indent=2) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
