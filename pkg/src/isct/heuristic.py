"""Two-stage heuristic: list scheduling fixes the configuration, then the
configuration's continuous problem is solved exactly."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field

from .evaluate import Schedule, apply_dpm_post
from .exact import Configuration, InfeasibleError, continuous_subproblem
from .graph import TaskGraph, rank_order, validate
from .power import TIME_TOL, PowerModel


@dataclass(frozen=True)
class HeftResult:
    configuration: Configuration
    start: dict[int, float]  # provisional, at f_max
    finish: dict[int, float]


@dataclass
class HeuristicResult:
    schedule: Schedule
    energy: float
    heft: HeftResult
    timings: dict[str, float] = field(default_factory=dict)


def heft_assign(graph: TaskGraph, power: PowerModel, K: int, seed: int | None = None) -> HeftResult:
    """Insertion-based list scheduling at the highest frequency.

    Tasks go in decreasing upward rank; each takes the earliest idle slot after
    its ready time on the processor where it finishes first. Ties go to the
    lowest id and lowest processor unless ``seed`` is given, in which case
    they are broken at random.
    """
    problems = validate(graph)
    if problems:
        raise ValueError("; ".join(p.message for p in problems))
    if K < 1:
        raise ValueError("need at least one processor")
    rng = random.Random(seed) if seed is not None else None
    preds = graph.predecessors()
    busy: list[list[tuple[float, float, int]]] = [[] for _ in range(K)]  # sorted (start, finish, task)
    start: dict[int, float] = {}
    finish: dict[int, float] = {}
    for u in rank_order(graph, power.f_max, seed):
        dur = graph.workload(u) / power.f_max
        ready = max((finish[p] for p in preds[u]), default=0.0)
        options = []
        for k in range(K):
            s = _first_fit(busy[k], ready, dur)
            options.append((s + dur, k, s))
        best_fin = min(f for f, _, _ in options)
        ties = [o for o in options if o[0] <= best_fin + TIME_TOL]
        fin, k, s = rng.choice(ties) if (rng and len(ties) > 1) else ties[0]
        busy[k].append((s, fin, u))
        busy[k].sort()
        start[u], finish[u] = s, fin
    late = [u for u in graph.ids if finish[u] > graph.period + TIME_TOL]
    if late:
        raise InfeasibleError(
            f"list schedule misses the deadline at the highest frequency (task {late[0]} ends at "
            f"{finish[late[0]]:.6g} s > {graph.period:.6g} s)"
        )
    config = Configuration(tuple(tuple(t for _, _, t in slots) for slots in busy))
    return HeftResult(config, start, finish)


def _first_fit(slots: list[tuple[float, float, int]], ready: float, dur: float) -> float:
    t = ready
    for s, f, _ in slots:
        if t + dur <= s + TIME_TOL:
            return t
        t = max(t, f)
    return t


def refine_continuous(graph: TaskGraph, power: PowerModel, heft: HeftResult, objective: str = "isct",
                      node_limit: int | None = None) -> tuple[Schedule, float]:
    """Best timing, splits and sleep decisions for the list schedule's
    configuration. With ``objective="isc+t"`` execution energy is minimised
    and sleep decisions are applied afterwards."""
    res = continuous_subproblem(graph, power, heft.configuration, objective=objective, node_limit=node_limit)
    assert res.schedule is not None, "list schedule met the deadline at f_max, so its configuration is feasible"
    if objective == "isc+t":
        sched = apply_dpm_post(graph, power, res.schedule)
        return sched, res.energy
    return res.schedule, res.energy


def heuristic_schedule(graph: TaskGraph, power: PowerModel, K: int, seed: int | None = None,
                       objective: str = "isct", node_limit: int | None = None) -> HeuristicResult:
    t0 = time.perf_counter()
    heft = heft_assign(graph, power, K, seed)
    t1 = time.perf_counter()
    sched, energy = refine_continuous(graph, power, heft, objective, node_limit)
    t2 = time.perf_counter()
    return HeuristicResult(sched, energy, heft, {"list": t1 - t0, "refine": t2 - t1})
