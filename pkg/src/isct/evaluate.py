"""Schedule semantics: idle intervals with wrap-around, energy accounting,
post-hoc sleep decisions, comparison reports and the schedule text format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .graph import TaskGraph
from .power import TIME_TOL, PowerModel, idle_cost, switchable


class ScheduleError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


@dataclass(frozen=True)
class Placement:
    task: int
    proc: int  # 1..K
    start: float  # seconds
    cycles: tuple[float, ...]  # cycles run at each frequency level

    def duration(self, freqs) -> float:
        return sum(n / f for n, f in zip(self.cycles, freqs))


@dataclass(frozen=True)
class Schedule:
    period: float
    processors: int
    freqs: tuple[float, ...]
    placements: tuple[Placement, ...]
    # (proc, interval index) -> sleep during that interval; interval j on a
    # processor is the gap before its j-th task, j = 0 being the wrap-around
    switches: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "placements", tuple(sorted(self.placements, key=lambda p: p.task)))

    def placement(self, task: int) -> Placement:
        for p in self.placements:
            if p.task == task:
                return p
        raise KeyError(task)

    def duration(self, task: int) -> float:
        return self.placement(task).duration(self.freqs)

    def finish(self, task: int) -> float:
        p = self.placement(task)
        return p.start + p.duration(self.freqs)

    def order(self, proc: int) -> list[int]:
        on = [p for p in self.placements if p.proc == proc]
        return [p.task for p in sorted(on, key=lambda p: (p.start, p.task))]

    def orders(self) -> dict[int, list[int]]:
        return {k: self.order(k) for k in range(1, self.processors + 1)}

    @property
    def used_processors(self) -> int:
        return len({p.proc for p in self.placements})

    def with_switches(self, switches: dict) -> "Schedule":
        return replace(self, switches=dict(switches))


@dataclass(frozen=True)
class IdleInterval:
    proc: int
    index: int
    length: float
    kind: str  # between-tasks | wrap-around | whole-period
    switched: bool = False


def schedule_problems(schedule: Schedule) -> list[str]:
    """Structural problems that need no task graph."""
    out = []
    Td = schedule.period
    for p in schedule.placements:
        if not 1 <= p.proc <= schedule.processors:
            out.append(f"task {p.task}: processor {p.proc} outside 1..{schedule.processors}")
        if len(p.cycles) != len(schedule.freqs):
            out.append(f"task {p.task}: split has {len(p.cycles)} levels, platform has {len(schedule.freqs)}")
        if any(n < -1e-6 for n in p.cycles):
            out.append(f"task {p.task}: negative cycle count in split")
        if p.start < -TIME_TOL:
            out.append(f"task {p.task}: starts before 0 ({p.start:.12g} s)")
        fin = p.start + p.duration(schedule.freqs)
        if fin > Td + TIME_TOL:
            out.append(f"task {p.task}: finishes at {fin:.12g} s after the deadline {Td:.12g} s")
    for k in range(1, schedule.processors + 1):
        seq = schedule.order(k)
        for u, v in zip(seq, seq[1:]):
            if schedule.finish(u) > schedule.placement(v).start + TIME_TOL:
                out.append(f"processor {k}: tasks {u} and {v} overlap")
    return out


def schedule_violations(graph: TaskGraph, power: PowerModel, schedule: Schedule) -> list[str]:
    """Every violated schedule invariant against a graph and platform."""
    out = []
    placed = {p.task for p in schedule.placements}
    for t in graph.tasks:
        if t.id not in placed:
            out.append(f"task {t.id} is not scheduled")
    for tid in sorted(placed - set(graph.ids)):
        out.append(f"task {tid} is not in the graph")
    if abs(schedule.period - graph.period) > TIME_TOL:
        out.append(f"schedule period {schedule.period} differs from graph period {graph.period}")
    out += schedule_problems(schedule)
    for p in schedule.placements:
        if p.task in graph.ids:
            w = graph.workload(p.task)
            if abs(sum(p.cycles) - w) > 1e-6 * w:
                out.append(f"task {p.task}: split sums to {sum(p.cycles):.12g}, workload is {w}")
    for u, v in graph.edges:
        if u in placed and v in placed and schedule.finish(u) > schedule.placement(v).start + TIME_TOL:
            out.append(f"edge ({u},{v}): task {v} starts before task {u} finishes")
    if not out:
        for iv in idle_intervals(schedule, include_zero=True):
            if iv.switched and not switchable(power, iv.length):
                out.append(
                    f"processor {iv.proc} interval {iv.index}: sleeps during {iv.length:.12g} s, "
                    f"shorter than the break-even time"
                )
    return out


def idle_intervals(schedule: Schedule, include_zero: bool = False) -> list[IdleInterval]:
    problems = schedule_problems(schedule)
    if problems:
        raise ScheduleError(problems)
    Td = schedule.period
    out = []
    for k in range(1, schedule.processors + 1):
        seq = schedule.order(k)
        if not seq:
            out.append(IdleInterval(k, 0, Td, "whole-period"))
            continue
        lengths = [Td - schedule.finish(seq[-1]) + schedule.placement(seq[0]).start]
        lengths += [schedule.placement(v).start - schedule.finish(u) for u, v in zip(seq, seq[1:])]
        for j, length in enumerate(lengths):
            length = max(length, 0.0)
            if length < TIME_TOL and not include_zero:
                continue
            kind = "wrap-around" if j == 0 else "between-tasks"
            out.append(IdleInterval(k, j, length, kind, bool(schedule.switches.get((k, j), False))))
    return out


@dataclass(frozen=True)
class ProcessorStats:
    proc: int
    used: bool
    busy: float
    idle_time: float
    idle_count: int
    exec_energy: float
    idle_energy: float


@dataclass(frozen=True)
class EvalReport:
    total: float
    exec_energy: float
    idle_energy: float
    idle_count: int  # unused processors count as one whole-period interval
    idle_time: float
    long_idle_count: int  # intervals at least the break-even time long
    used_processors: int
    processors: int
    per_processor: tuple[ProcessorStats, ...]

    @property
    def used_idle_count(self) -> int:
        return sum(p.idle_count for p in self.per_processor if p.used)

    @property
    def used_idle_time(self) -> float:
        return sum(p.idle_time for p in self.per_processor if p.used)

    @property
    def long_idle_fraction(self) -> float:
        return self.long_idle_count / self.idle_count if self.idle_count else 0.0


def schedule_energy(graph: TaskGraph, power: PowerModel, schedule: Schedule, switch_policy: str = "optimal") -> EvalReport:
    """Total energy of one period.

    ``switch_policy`` is ``optimal`` (sleep whenever the interval reaches the
    break-even time), ``never``, or ``given`` (use the schedule's flags).
    """
    if switch_policy not in ("optimal", "never", "given"):
        raise ValueError(f"unknown switch policy {switch_policy!r}")
    # flags only matter, and are only checked, under the given policy
    checked = schedule if switch_policy == "given" else replace(schedule, switches={})
    problems = schedule_violations(graph, power, checked)
    if problems:
        raise ScheduleError(problems)
    intervals = idle_intervals(schedule)
    e_cyc = power.cycle_energies
    stats = []
    long_count = 0
    for k in range(1, schedule.processors + 1):
        mine = [p for p in schedule.placements if p.proc == k]
        ex = sum(n * e for p in mine for n, e in zip(p.cycles, e_cyc))
        busy = sum(p.duration(schedule.freqs) for p in mine)
        ivs = [iv for iv in intervals if iv.proc == k]
        idle_e = 0.0
        for iv in ivs:
            if iv.kind == "whole-period":
                long_count += 1
                continue
            if switch_policy == "optimal":
                sw = switchable(power, iv.length)
            elif switch_policy == "never":
                sw = False
            else:
                sw = iv.switched
            idle_e += idle_cost(power, iv.length, sw)
            if switchable(power, iv.length):
                long_count += 1
        stats.append(ProcessorStats(
            proc=k, used=bool(mine), busy=busy,
            idle_time=sum(iv.length for iv in ivs), idle_count=len(ivs),
            exec_energy=ex, idle_energy=idle_e,
        ))
    exec_e = sum(s.exec_energy for s in stats)
    idle_e = sum(s.idle_energy for s in stats)
    return EvalReport(
        total=exec_e + idle_e,
        exec_energy=exec_e,
        idle_energy=idle_e,
        idle_count=sum(s.idle_count for s in stats),
        idle_time=sum(s.idle_time for s in stats),
        long_idle_count=long_count,
        used_processors=sum(s.used for s in stats),
        processors=schedule.processors,
        per_processor=tuple(stats),
    )


def optimal_switches(power: PowerModel, schedule: Schedule) -> dict:
    flags = {}
    for iv in idle_intervals(schedule, include_zero=True):
        if iv.kind != "whole-period":
            flags[(iv.proc, iv.index)] = iv.length >= TIME_TOL and switchable(power, iv.length)
    return flags


def apply_dpm_post(graph: TaskGraph, power: PowerModel, schedule: Schedule) -> Schedule:
    """Sleep in every idle interval that reaches the break-even time."""
    problems = schedule_violations(graph, power, replace(schedule, switches={}))
    if problems:
        raise ScheduleError(problems)
    return schedule.with_switches(optimal_switches(power, schedule))


# ---------------------------------------------------------------------------
# comparison reports


@dataclass(frozen=True)
class CompareRow:
    name: str
    tasks: int
    workload: int
    period: float
    baseline_energy: float
    isct_energy: float
    saving: float  # percent
    baseline_idle_count: int
    isct_idle_count: int
    baseline_idle_time: float
    isct_idle_time: float
    baseline_used: int
    isct_used: int
    baseline_long: int
    isct_long: int


def compare_report(graph: TaskGraph, power: PowerModel, isct: Schedule, baseline: Schedule, name: str = "") -> CompareRow:
    a = schedule_energy(graph, power, isct)
    b = schedule_energy(graph, power, baseline)
    saving = 0.0 if b.total == 0 else 100.0 * (b.total - a.total) / b.total
    return CompareRow(
        name=name, tasks=graph.n, workload=graph.total_workload, period=graph.period,
        baseline_energy=b.total, isct_energy=a.total, saving=saving,
        baseline_idle_count=b.idle_count, isct_idle_count=a.idle_count,
        baseline_idle_time=b.idle_time, isct_idle_time=a.idle_time,
        baseline_used=b.used_processors, isct_used=a.used_processors,
        baseline_long=b.long_idle_count, isct_long=a.long_idle_count,
    )


# (header, width, format spec, getter)
_COLUMNS = [
    ("graph", 10, "", lambda r: r.name),
    ("tasks", 5, "", lambda r: r.tasks),
    ("Mcycles", 8, ".2f", lambda r: r.workload / 1e6),
    ("Td_ms", 6, ".2f", lambda r: r.period * 1e3),
    ("E_iSC+T_mJ", 10, ".4f", lambda r: r.baseline_energy * 1e3),
    ("E_iSCT_mJ", 9, ".4f", lambda r: r.isct_energy * 1e3),
    ("saving_%", 8, ".2f", lambda r: r.saving),
    ("idle#_iSC+T", 11, "", lambda r: r.baseline_idle_count),
    ("idle#_iSCT", 10, "", lambda r: r.isct_idle_count),
    ("idle_ms_iSC+T", 13, ".2f", lambda r: r.baseline_idle_time * 1e3),
    ("idle_ms_iSCT", 12, ".2f", lambda r: r.isct_idle_time * 1e3),
    ("used_iSC+T", 10, "", lambda r: r.baseline_used),
    ("used_iSCT", 9, "", lambda r: r.isct_used),
]


def averages(rows: list[CompareRow]) -> dict:
    if not rows:
        return {}
    n = len(rows)
    return {
        "instances": n,
        "saving_mean": sum(r.saving for r in rows) / n,
        "saving_max": max(r.saving for r in rows),
        "baseline_idle_count": sum(r.baseline_idle_count for r in rows),
        "isct_idle_count": sum(r.isct_idle_count for r in rows),
        "baseline_idle_time": sum(r.baseline_idle_time for r in rows),
        "isct_idle_time": sum(r.isct_idle_time for r in rows),
        "baseline_long_fraction": sum(r.baseline_long for r in rows) / max(1, sum(r.baseline_idle_count for r in rows)),
        "isct_long_fraction": sum(r.isct_long for r in rows) / max(1, sum(r.isct_idle_count for r in rows)),
    }


def render_table(rows: list[CompareRow]) -> str:
    def cell(i, width, text):
        return f"{text:<{width}}" if i == 0 else f"{text:>{width}}"

    lines = [" ".join(cell(i, w, name) for i, (name, w, _, _) in enumerate(_COLUMNS))]
    for r in rows:
        lines.append(" ".join(cell(i, w, format(get(r), spec)) for i, (_, w, spec, get) in enumerate(_COLUMNS)))
    if rows:
        avg = averages(rows)
        lines.append(
            f"average saving {avg['saving_mean']:.2f}% (max {avg['saving_max']:.2f}%); "
            f"idle intervals {avg['baseline_idle_count']} -> {avg['isct_idle_count']}; "
            f"intervals >= break-even {100 * avg['baseline_long_fraction']:.2f}% -> {100 * avg['isct_long_fraction']:.2f}%"
        )
    return "\n".join(lines) + "\n"


def render_records(rows: list[CompareRow]) -> str:
    out = [json.dumps(r.__dict__, sort_keys=True) for r in rows]
    if rows:
        out.append(json.dumps({"average": averages(rows)}, sort_keys=True))
    return "\n".join(out) + ("\n" if out else "")


# ---------------------------------------------------------------------------
# schedule text format


def save_schedule(schedule: Schedule) -> str:
    lines = [
        "schedule v1",
        f"period {schedule.period!r}",
        f"processors {schedule.processors}",
    ]
    for p in schedule.placements:
        lines.append(f"task {p.task} proc {p.proc} start {float(p.start)!r}")
        for i, n in enumerate(p.cycles):
            if n != 0:
                lines.append(f"split {p.task} {i + 1} {float(n)!r}")
    for (k, j), flag in sorted(schedule.switches.items()):
        lines.append(f"switch {k} {j} {int(bool(flag))}")
    return "\n".join(lines) + "\n"


class ScheduleParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def load_schedule(text: str, power: PowerModel) -> Schedule:
    header = False
    period = None
    K = None
    starts: dict[int, tuple[int, float]] = {}
    splits: dict[int, list[float]] = {}
    switches = {}
    m = power.m
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if not header:
            if parts != ["schedule", "v1"]:
                raise ScheduleParseError(lineno, "expected header 'schedule v1'")
            header = True
            continue
        try:
            if parts[0] == "period" and len(parts) == 2:
                period = float(parts[1])
            elif parts[0] == "processors" and len(parts) == 2:
                K = int(parts[1])
            elif parts[0] == "task" and len(parts) == 6 and parts[2] == "proc" and parts[4] == "start":
                starts[int(parts[1])] = (int(parts[3]), float(parts[5]))
            elif parts[0] == "split" and len(parts) == 4:
                i = int(parts[2])
                if not 1 <= i <= m:
                    raise ScheduleParseError(lineno, f"frequency index {i} outside 1..{m}")
                splits.setdefault(int(parts[1]), [0.0] * m)[i - 1] = float(parts[3])
            elif parts[0] == "switch" and len(parts) == 4 and parts[3] in ("0", "1"):
                switches[(int(parts[1]), int(parts[2]))] = parts[3] == "1"
            else:
                raise ScheduleParseError(lineno, f"cannot parse {line!r}")
        except ValueError as exc:
            if isinstance(exc, ScheduleParseError):
                raise
            raise ScheduleParseError(lineno, f"cannot parse {line!r}") from None
    if not header or period is None or K is None:
        raise ScheduleParseError(0, "schedule needs header, period and processors lines")
    unknown = set(splits) - set(starts)
    if unknown:
        raise ScheduleParseError(0, f"split for unplaced task(s) {sorted(unknown)}")
    placements = tuple(
        Placement(t, k, s, tuple(splits.get(t, [0.0] * m))) for t, (k, s) in sorted(starts.items())
    )
    return Schedule(period, K, power.freqs, placements, switches)
