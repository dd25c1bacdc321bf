"""Compare the exact solver with the brute-force HiGHS oracle on random tiny
instances and print the bracket for each.

    python3 scripts/oracle_check.py --count 50
"""

import argparse

from isct.exact import discretized_oracle, exact_schedule
from isct.graph import GenParams, TaskGraph, random_taskgraph
from isct.power import PowerModel


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--seed", type=int, default=5000)
    ap.add_argument("--processors", type=int, default=2)
    ap.add_argument("--slack", type=float, default=1.2, help="period as a multiple of the work at 1.53 GHz")
    args = ap.parse_args()

    power = PowerModel((1.01e9, 1.53e9, 2.1e9), c=0.276, e_sw=385e-6, t_sw=5e-3,
                       pdep=(430.9e-3, 710.7e-3, 1118.2e-3))
    bad = 0
    for i in range(args.count):
        g = random_taskgraph(GenParams(2 + i % 3, seed=args.seed + i))
        g = TaskGraph(g.tasks, g.edges, float(f"{args.slack * g.total_workload / 1.53e9:.9g}"))
        res = exact_schedule(g, power, args.processors)
        br = discretized_oracle(g, power, args.processors)
        ok = br.contains(res.energy, tol=1e-12 + 1e-9 * res.energy)
        bad += not ok
        print(f"{i:3d} n={g.n} exact {res.energy * 1e3:.9f} mJ  bracket [{br.lower * 1e3:.9f}, "
              f"{br.upper * 1e3:.9f}]  {'ok' if ok else 'OUTSIDE'}")
    print(f"{args.count - bad}/{args.count} inside")
    raise SystemExit(1 if bad else 0)


if __name__ == "__main__":
    main()
