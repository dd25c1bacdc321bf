"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 infeasible instance or schedule
violations, 3 budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from .evaluate import (ScheduleError, ScheduleParseError, apply_dpm_post, compare_report, load_schedule,
                       render_records, render_table, save_schedule, schedule_energy, schedule_violations)
from .exact import ExactBudgetError, ExactLimits, ExactScaleError, InfeasibleError, exact_schedule
from .gantt import gantt_svg
from .graph import GenParams, GraphError, TaskGraph, load_graph, parse_time, random_taskgraph, save_graph
from .heuristic import heuristic_schedule
from .model import build_isc_t_model, build_isct_model, export_lp
from .power import Platform, PlatformParseError, default_platform, load_platform

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class RunConfig:
    graph: TaskGraph
    platform: Platform
    processors: int
    method: str
    objective: str
    seed: int | None
    limits: ExactLimits
    threads: int


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _platform(args) -> Platform:
    if args.platform:
        return load_platform(_read(args.platform))
    return default_platform()


def _write(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _note(output: str | None, text: str) -> None:
    # keep stdout clean when the main artifact goes there
    print(text, file=sys.stderr if output in (None, "-") else sys.stdout)


def _limits(args) -> ExactLimits:
    base = ExactLimits()
    return ExactLimits(
        node_budget=args.node_budget if args.node_budget is not None else base.node_budget,
        time_budget=args.time_budget if args.time_budget is not None else base.time_budget,
        force=args.force,
    )


def _solve(cfg: RunConfig):
    """(schedule, energy, optimal flag) for one method/objective pair."""
    power = cfg.platform.power
    objective = "isc+t" if cfg.objective == "isc-plus-t" else "isct"
    if cfg.method == "exact":
        res = exact_schedule(cfg.graph, power, cfg.processors, cfg.limits, objective, cfg.threads)
        sched, optimal = res.schedule, res.optimal
    else:
        res = heuristic_schedule(cfg.graph, power, cfg.processors, cfg.seed, objective)
        sched, optimal = res.schedule, False
    if objective == "isc+t":
        sched = apply_dpm_post(cfg.graph, power, sched)
    return sched, schedule_energy(cfg.graph, power, sched).total, optimal


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    params = GenParams(
        task_count=args.tasks, mean_workload=args.mean_workload, workload_spread=args.spread,
        max_in_degree=args.max_in, max_out_degree=args.max_out, period=parse_time(args.period),
        seed=args.seed, extra_edge_prob=args.extra_edge_prob,
    )
    g = random_taskgraph(params)
    _write(args.output, save_graph(g))
    _note(args.output, f"tasks {g.n}\ntotal_workload {g.total_workload} cycles")
    return EXIT_OK


def cmd_solve(args) -> int:
    platform = _platform(args)
    graph = load_graph(_read(args.graph))
    K = args.processors or platform.processors
    if args.method == "export-lp" or args.lp:
        build = build_isc_t_model if args.objective == "isc-plus-t" else build_isct_model
        text = export_lp(build(graph, platform.power, K))
        if args.method == "export-lp":
            _write(args.lp or args.output, text)
            return EXIT_OK
        _write(args.lp, text)
    cfg = RunConfig(graph, platform, K, args.method, args.objective, args.seed, _limits(args), args.threads)
    sched, energy, optimal = _solve(cfg)
    _write(args.output, save_schedule(sched))
    _note(args.output, f"energy {energy * 1e3:.6f} mJ ({'optimal' if optimal else 'not proven optimal'})")
    if args.method == "exact" and not optimal:
        print("isct: search budget exhausted; best schedule found was written", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def cmd_eval(args) -> int:
    platform = _platform(args)
    graph = load_graph(_read(args.graph))
    power = platform.power
    sched = load_schedule(_read(args.schedule), power)
    problems = schedule_violations(graph, power, sched)
    if problems:
        for p in problems:
            print(f"violation: {p}", file=sys.stderr)
        return EXIT_INFEASIBLE
    policy = "given" if sched.switches and not args.optimal_switching else "optimal"
    rep = schedule_energy(graph, power, sched, policy)
    if args.gantt:
        Path(args.gantt).write_text(gantt_svg(sched, graph.period))
    if args.format == "json":
        out = {
            "total_mJ": rep.total * 1e3, "exec_mJ": rep.exec_energy * 1e3, "idle_mJ": rep.idle_energy * 1e3,
            "idle_intervals": rep.idle_count, "idle_ms": rep.idle_time * 1e3,
            "idle_intervals_used": rep.used_idle_count, "idle_ms_used": rep.used_idle_time * 1e3,
            "long_intervals": rep.long_idle_count, "used_processors": rep.used_processors,
            "processors": rep.processors,
        }
        print(json.dumps(out, sort_keys=True))
    else:
        print(f"total {rep.total * 1e3:.6f} mJ (exec {rep.exec_energy * 1e3:.6f}, idle {rep.idle_energy * 1e3:.6f})")
        print(f"idle intervals {rep.idle_count} ({rep.used_idle_count} on used processors), "
              f"idle time {rep.idle_time * 1e3:.4f} ms, >= break-even {rep.long_idle_count}")
        print(f"used processors {rep.used_processors} of {rep.processors}")
        for s in rep.per_processor:
            state = "used" if s.used else "unused"
            print(f"  P{s.proc} {state:<6} busy {s.busy * 1e3:.4f} ms idle {s.idle_time * 1e3:.4f} ms "
                  f"in {s.idle_count} interval(s), energy {(s.exec_energy + s.idle_energy) * 1e3:.6f} mJ")
    return EXIT_OK


def load_manifest(text: str, base: Path) -> list[tuple[str, TaskGraph, int | None]]:
    """``manifest v1`` then ``instance <name> <graph file> [processors]``
    lines; graph paths are relative to the manifest."""
    out = []
    header = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if not header:
            if parts != ["manifest", "v1"]:
                raise UsageError(f"manifest line {lineno}: expected header 'manifest v1'")
            header = True
            continue
        if parts[0] != "instance" or len(parts) not in (3, 4):
            raise UsageError(f"manifest line {lineno}: cannot parse {line!r}")
        K = int(parts[3]) if len(parts) == 4 else None
        out.append((parts[1], load_graph(_read(str(base / parts[2]))), K))
    if not header and text.strip():
        raise UsageError("manifest: missing header 'manifest v1'")
    return out


def cmd_compare(args) -> int:
    platform = _platform(args)
    entries = load_manifest(_read(args.manifest), Path(args.manifest).parent)
    rows = []
    limits = _limits(args)
    for name, graph, K in entries:
        K = args.processors or K or platform.processors
        ours = RunConfig(graph, platform, K, args.isct_method, "isct", args.seed, limits, args.threads)
        base = RunConfig(graph, platform, K, args.baseline_method, "isc-plus-t", args.seed, limits, args.threads)
        a, _, _ = _solve(ours)
        b, _, _ = _solve(base)
        rows.append(compare_report(graph, platform.power, a, b, name))
    _write(args.output, render_records(rows) if args.format == "jsonl" else render_table(rows))
    return EXIT_OK


def cmd_suite(args) -> int:
    from .suite import SuiteSpec, render_summary, run_suite, write_artifacts

    platform = _platform(args)
    spec = SuiteSpec(count=args.count, base_seed=args.base_seed)
    results, summary = run_suite(spec, platform.power, threads=args.threads, limits=_limits(args))
    if args.out:
        write_artifacts(results, summary, platform.power, Path(args.out), svg=not args.no_svg)
    sys.stdout.write(render_summary(results, summary))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_common(p):
    p.add_argument("--platform", help="platform file (default: $ISCT_PLATFORM or the bundled reference)")


def _add_solver(p):
    p.add_argument("--processors", "-K", type=int, help="processor count (default: from the platform)")
    p.add_argument("--threads", type=int, default=1, help="worker processes for the exact search")
    p.add_argument("--force", action="store_true", help="run the exact search beyond its size caps")
    p.add_argument("--node-budget", type=int, help="LP solves allowed in the exact search")
    p.add_argument("--time-budget", type=float, help="seconds allowed in the exact search")
    p.add_argument("--seed", type=int, help="random tie-breaking in list scheduling")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="isct", description="Energy-aware DAG scheduling with DVFS and sleep states.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a random task graph")
    p.add_argument("--tasks", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--period", default="8ms", help="deadline/period, e.g. 8ms")
    p.add_argument("--mean-workload", type=float, default=2e6, help="mean cycles per task")
    p.add_argument("--spread", type=float, default=0.5, help="relative workload spread")
    p.add_argument("--max-in", type=int, default=2)
    p.add_argument("--max-out", type=int, default=3)
    p.add_argument("--extra-edge-prob", type=float, default=0.3)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="schedule a task graph")
    p.add_argument("graph")
    p.add_argument("--method", choices=["exact", "heuristic", "export-lp"], default="exact")
    p.add_argument("--objective", choices=["isct", "isc-plus-t"], default="isct")
    p.add_argument("--output", "-o", help="schedule file (default: stdout)")
    p.add_argument("--lp", help="also write the MILP in LP format here")
    _add_common(p)
    _add_solver(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("eval", help="check and price a schedule")
    p.add_argument("schedule")
    p.add_argument("graph")
    p.add_argument("--gantt", help="write an SVG Gantt chart here")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--optimal-switching", action="store_true", help="ignore stored sleep flags")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="joint optimisation vs. scale-then-sleep over a manifest")
    p.add_argument("manifest")
    p.add_argument("--isct-method", choices=["exact", "heuristic"], default="exact")
    p.add_argument("--baseline-method", choices=["exact", "heuristic"], default="exact")
    p.add_argument("--format", choices=["text", "jsonl"], default="text")
    p.add_argument("--output", "-o")
    _add_common(p)
    _add_solver(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("suite", help="run the seeded comparison suite")
    p.add_argument("--count", type=int, default=25)
    p.add_argument("--base-seed", type=int, default=7100)
    p.add_argument("--out", help="directory for schedules, charts and reports")
    p.add_argument("--no-svg", action="store_true")
    _add_common(p)
    _add_solver(p)
    p.set_defaults(func=cmd_suite)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, GraphError, PlatformParseError, ScheduleParseError, ExactScaleError) as exc:
        print(f"isct: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InfeasibleError, ScheduleError) as exc:
        print(f"isct: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ExactBudgetError as exc:
        print(f"isct: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ValueError as exc:
        print(f"isct: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
