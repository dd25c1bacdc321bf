"""Seeded comparison suite: exact and heuristic joint scheduling against the
scale-then-sleep baseline on small random graphs."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from .evaluate import (CompareRow, EvalReport, Schedule, apply_dpm_post, averages, compare_report,
                       idle_intervals, render_records, render_table, save_schedule, schedule_energy)
from .exact import ExactLimits, exact_schedule
from .graph import GenParams, TaskGraph, critical_path, random_taskgraph, save_graph
from .heuristic import heuristic_schedule
from .power import PowerModel


@dataclass(frozen=True)
class SuiteSpec:
    count: int = 25
    base_seed: int = 7100
    min_tasks: int = 4
    max_tasks: int = 8
    processors: tuple[int, ...] = (2, 3)
    load: float = 0.5  # workload at the middle frequency as a share of K * period
    mean_workload: float = 2e6


@dataclass(frozen=True)
class Instance:
    name: str
    graph: TaskGraph
    processors: int


@dataclass
class InstanceResult:
    instance: Instance
    exact: Schedule
    exact_energy: float
    exact_optimal: bool
    heuristic: Schedule
    heuristic_energy: float
    baseline: Schedule  # with post-hoc sleep decisions
    baseline_energy: float
    row: CompareRow
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def gap(self) -> float:
        return (self.heuristic_energy - self.exact_energy) / self.exact_energy if self.exact_energy else 0.0


def suite_instances(spec: SuiteSpec, power: PowerModel) -> list[Instance]:
    """Deterministic instances; the period is set from the load target and
    raised to the critical path at the middle frequency when that is longer."""
    f_mid = power.freqs[power.m // 2]
    span = spec.max_tasks - spec.min_tasks + 1
    out = []
    for i in range(spec.count):
        n = spec.min_tasks + i % span
        K = spec.processors[i % len(spec.processors)]
        g = random_taskgraph(GenParams(n, mean_workload=spec.mean_workload, seed=spec.base_seed + i))
        period = max(g.total_workload / (f_mid * spec.load * K), critical_path(g, f_mid))
        out.append(Instance(f"s{i + 1:02d}", replace(g, period=float(f"{period:.12g}")), K))
    return out


def solve_instance(inst: Instance, power: PowerModel, threads: int = 1,
                   limits: ExactLimits | None = None) -> InstanceResult:
    g, K = inst.graph, inst.processors
    t0 = time.perf_counter()
    ex = exact_schedule(g, power, K, limits, threads=threads)
    t1 = time.perf_counter()
    heur = heuristic_schedule(g, power, K)
    t2 = time.perf_counter()
    base = exact_schedule(g, power, K, limits, objective="isc+t")
    base_sched = apply_dpm_post(g, power, base.schedule)
    t3 = time.perf_counter()
    row = compare_report(g, power, ex.schedule, base_sched, inst.name)
    return InstanceResult(
        inst, ex.schedule, ex.energy, ex.optimal, heur.schedule, heur.energy,
        base_sched, schedule_energy(g, power, base_sched).total, row,
        {"exact": t1 - t0, "heuristic": t2 - t1, "baseline": t3 - t2},
    )


def closure_error(graph: TaskGraph, schedule: Schedule) -> float:
    """Largest |busy + idle - period| over used processors."""
    worst = 0.0
    ivs = idle_intervals(schedule)
    for k in range(1, schedule.processors + 1):
        seq = schedule.order(k)
        if not seq:
            continue
        busy = sum(schedule.duration(u) for u in seq)
        idle = sum(iv.length for iv in ivs if iv.proc == k)
        worst = max(worst, abs(busy + idle - graph.period))
    return worst


def summarize(results: list[InstanceResult], power: PowerModel) -> dict:
    rows = [r.row for r in results]
    avg = averages(rows)
    if not results:
        return {"instances": 0}
    gaps = [r.gap for r in results]
    rel = 1e-9
    return {
        **avg,
        "exact_le_heuristic": all(r.exact_energy <= r.heuristic_energy * (1 + rel) for r in results),
        "heuristic_le_baseline": all(r.heuristic_energy <= r.baseline_energy * (1 + rel) for r in results),
        "gap_mean": sum(gaps) / len(gaps),
        "gap_max": max(gaps),
        "all_optimal": all(r.exact_optimal for r in results),
        "closure_max": max(max(closure_error(r.instance.graph, s) for s in (r.exact, r.heuristic, r.baseline))
                           for r in results),
        "used_idle_count_isct": sum(_used(r.instance.graph, power, r.exact).used_idle_count for r in results),
        "used_idle_count_baseline": sum(_used(r.instance.graph, power, r.baseline).used_idle_count for r in results),
    }


def _used(graph, power, schedule) -> EvalReport:
    return schedule_energy(graph, power, schedule)


def run_suite(spec: SuiteSpec, power: PowerModel, threads: int = 1,
              limits: ExactLimits | None = None) -> tuple[list[InstanceResult], dict]:
    results = [solve_instance(inst, power, threads, limits) for inst in suite_instances(spec, power)]
    return results, summarize(results, power)


def render_summary(results: list[InstanceResult], summary: dict) -> str:
    """Deterministic text report (no timings)."""
    lines = [render_table([r.row for r in results]).rstrip("\n")]
    lines.append("")
    lines.append(f"{'graph':<6} {'K':>2} {'E_exact_mJ':>11} {'E_heur_mJ':>10} {'E_base_mJ':>10} {'gap_%':>7}")
    for r in results:
        lines.append(
            f"{r.instance.name:<6} {r.instance.processors:>2} {r.exact_energy * 1e3:>11.5f} "
            f"{r.heuristic_energy * 1e3:>10.5f} {r.baseline_energy * 1e3:>10.5f} {100 * r.gap:>7.2f}"
        )
    lines.append("")
    for key in sorted(summary):
        val = summary[key]
        lines.append(f"{key} {val:.6g}" if isinstance(val, float) else f"{key} {val}")
    return "\n".join(lines) + "\n"


def write_artifacts(results: list[InstanceResult], summary: dict, power: PowerModel, outdir: Path,
                    svg: bool = True) -> None:
    """Graphs, LP exports, schedules, optional Gantt charts and both report formats."""
    from .gantt import gantt_svg
    from .model import build_isct_model, export_lp

    outdir.mkdir(parents=True, exist_ok=True)
    for r in results:
        name = r.instance.name
        (outdir / f"{name}.graph.txt").write_text(save_graph(r.instance.graph))
        (outdir / f"{name}.lp").write_text(export_lp(build_isct_model(r.instance.graph, power, r.instance.processors)))
        for tag, sched in (("exact", r.exact), ("heuristic", r.heuristic), ("baseline", r.baseline)):
            (outdir / f"{name}.{tag}.schedule.txt").write_text(save_schedule(sched))
            if svg:
                (outdir / f"{name}.{tag}.svg").write_text(gantt_svg(sched, r.instance.graph.period))
    (outdir / "report.txt").write_text(render_summary(results, summary))
    (outdir / "report.jsonl").write_text(render_records([r.row for r in results]))
    (outdir / "summary.json").write_text(json.dumps(_jsonable(summary), sort_keys=True, indent=1) + "\n")


def _jsonable(d: dict) -> dict:
    return {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in d.items()}
