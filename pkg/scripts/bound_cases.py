"""Where the robots meet as a function of the input bounds (zero-crossing cases).

Runs the shipped ``bounds_*`` fixtures and prints the final agreement value
next to the initial extremes.
"""

from rendezvous.io import load_scenario, shipped_scenarios
from rendezvous.sim import simulate

EXPECT = {"a": "strictly inside (min, max)", "b": "max(x0)", "c": "min(x0)", "d": "frozen at x0"}


def main():
    shipped = shipped_scenarios()
    for name in sorted(k for k in shipped if k.startswith("bounds_")):
        s = load_scenario(shipped[name])
        log = simulate(s)
        x0 = s.x0[:, 0]
        final = log.x[-1, :, 0]
        case = name.split("_")[1]
        lo, hi = s.u_min[0, 0], s.u_max[0, 0]
        print(f"{name:16s} bounds=[{lo:+.1f},{hi:+.1f}] x0 in [{x0.min():+.2f},{x0.max():+.2f}] "
              f"final mean={final.mean():+.5f} spread={final.max() - final.min():.1e} "
              f"t_cons={log.consensus_time}  expected: {EXPECT[case]}")


if __name__ == "__main__":
    main()
