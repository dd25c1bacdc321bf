"""Regenerate the golden files under fixtures/golden.

Run after an intentional format change, then review the diff.
"""

from pathlib import Path

from isct.evaluate import save_schedule
from isct.exact import exact_schedule
from isct.gantt import gantt_svg
from isct.graph import load_graph
from isct.model import build_isc_t_model, build_isct_model, export_lp
from isct.power import load_platform

ROOT = Path(__file__).resolve().parent.parent
FIX = ROOT / "fixtures"
GOLD = FIX / "golden"


def main():
    GOLD.mkdir(exist_ok=True)
    power = load_platform((FIX / "platform.txt").read_text()).power
    one = load_graph((FIX / "single_task.txt").read_text())
    two = load_graph((FIX / "two_independent.txt").read_text())
    (GOLD / "single_task_K1.lp").write_text(export_lp(build_isct_model(one, power, 1)))
    (GOLD / "two_independent_K2.lp").write_text(export_lp(build_isct_model(two, power, 2)))
    (GOLD / "two_independent_K2_baseline.lp").write_text(export_lp(build_isc_t_model(two, power, 2)))
    best = exact_schedule(two, power, 2).schedule
    (GOLD / "two_independent_K2.schedule.txt").write_text(save_schedule(best))
    (GOLD / "two_independent_K2.svg").write_text(gantt_svg(best))
    for path in sorted(GOLD.iterdir()):
        print(path.relative_to(ROOT))


if __name__ == "__main__":
    main()
