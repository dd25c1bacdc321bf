"""Run the seeded comparison suite and write every artifact.

    python3 scripts/run_suite.py --out results/suite --threads 4
"""

import argparse
import time
from pathlib import Path

from isct.power import reference_platform
from isct.suite import SuiteSpec, render_summary, run_suite, write_artifacts


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/suite")
    ap.add_argument("--count", type=int, default=25)
    ap.add_argument("--base-seed", type=int, default=7100)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--no-svg", action="store_true")
    args = ap.parse_args()

    power = reference_platform().power
    t0 = time.perf_counter()
    results, summary = run_suite(SuiteSpec(count=args.count, base_seed=args.base_seed), power, args.threads)
    write_artifacts(results, summary, power, Path(args.out), svg=not args.no_svg)
    print(render_summary(results, summary), end="")
    slowest = max(results, key=lambda r: r.timings["exact"])
    print(f"\n{time.perf_counter() - t0:.1f} s total; slowest exact solve {slowest.instance.name} "
          f"({slowest.timings['exact']:.2f} s)")


if __name__ == "__main__":
    main()
