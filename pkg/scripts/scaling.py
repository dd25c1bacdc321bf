"""Heuristic runtime and energy against the scale-then-sleep heuristic on
larger random graphs (beyond the exact solver's reach).

    python3 scripts/scaling.py --sizes 8 12 16 20 28 --processors 4
"""

import argparse
from dataclasses import replace

from isct.evaluate import schedule_energy
from isct.graph import GenParams, critical_path, random_taskgraph
from isct.heuristic import heuristic_schedule
from isct.power import reference_platform


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 12, 16, 20, 28])
    ap.add_argument("--processors", type=int, default=4)
    ap.add_argument("--load", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()

    power = reference_platform().power
    f_mid = power.freqs[power.m // 2]
    K = args.processors
    print(f"{'n':>3} {'Td_ms':>7} {'E_joint_mJ':>11} {'E_base_mJ':>10} {'saving_%':>8} {'list_s':>7} {'refine_s':>8}")
    for n in args.sizes:
        g = random_taskgraph(GenParams(n, seed=args.seed + n))
        period = max(g.total_workload / (f_mid * args.load * K), critical_path(g, f_mid))
        g = replace(g, period=float(f"{period:.12g}"))
        joint = heuristic_schedule(g, power, K)
        base = heuristic_schedule(g, power, K, objective="isc+t")
        e_base = schedule_energy(g, power, base.schedule).total
        print(f"{n:>3} {g.period * 1e3:>7.3f} {joint.energy * 1e3:>11.5f} {e_base * 1e3:>10.5f} "
              f"{100 * (e_base - joint.energy) / e_base:>8.2f} {joint.timings['list']:>7.3f} "
              f"{joint.timings['refine']:>8.3f}")


if __name__ == "__main__":
    main()
