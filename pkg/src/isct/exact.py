"""Exact solver for small instances.

A configuration fixes which processor runs each task and the task order on
every processor. For a fixed configuration the remaining problem (start
times, frequency splits, sleep decisions) is solved exactly by
branch-and-bound over the sleep decisions with LP relaxations. The outer
search enumerates configurations up to processor relabelling, visiting them
in order of a per-assignment lower bound.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .evaluate import Placement, Schedule, optimal_switches
from .graph import TaskGraph, reachability, validate
from .lp import LinearProgram, solve_lp
from .power import TIME_TOL, PowerModel, exec_envelope, switchable

REL_TOL = 1e-9  # relative energy tolerance for ties and pruning


class ExactScaleError(ValueError):
    """Instance exceeds the exact-solver caps."""


class InfeasibleError(ValueError):
    """No schedule meets the deadline."""


@dataclass(frozen=True)
class Configuration:
    orders: tuple[tuple[int, ...], ...]  # orders[k - 1]: tasks on processor k, in execution order

    @property
    def processors(self) -> int:
        return len(self.orders)

    @property
    def assignment(self) -> dict[int, int]:
        return {u: k for k, seq in enumerate(self.orders, start=1) for u in seq}

    @property
    def key(self) -> tuple:
        return self.orders

    @classmethod
    def from_schedule(cls, schedule: Schedule) -> "Configuration":
        return cls(tuple(tuple(schedule.order(k)) for k in range(1, schedule.processors + 1)))


@dataclass(frozen=True)
class ExactLimits:
    max_tasks: int = 8
    max_processors: int = 3
    max_levels: int = 5
    node_budget: int = 2_000_000  # LP solves
    time_budget: float = 3600.0  # seconds
    force: bool = False


@dataclass
class SubResult:
    status: str  # optimal | infeasible | cutoff | budget
    schedule: Schedule | None = None
    energy: float = math.inf
    nodes: int = 0


@dataclass
class ExactResult:
    schedule: Schedule
    energy: float
    optimal: bool
    nodes: int = 0
    configurations: int = 0
    elapsed: float = 0.0


# ---------------------------------------------------------------------------
# configuration feasibility


def _asap(graph: TaskGraph, config: Configuration, durations: dict[int, float]) -> dict[int, float] | None:
    """Earliest start times under DAG and processor-order precedence, or None
    if the combined precedence relation is cyclic."""
    succ: dict[int, list[int]] = {u: [] for u in graph.ids}
    indeg = {u: 0 for u in graph.ids}
    for u, v in graph.edges:
        succ[u].append(v)
        indeg[v] += 1
    for seq in config.orders:
        for u, v in zip(seq, seq[1:]):
            succ[u].append(v)
            indeg[v] += 1
    start = {u: 0.0 for u in graph.ids}
    ready = [u for u in graph.ids if indeg[u] == 0]
    seen = 0
    while ready:
        u = ready.pop()
        seen += 1
        fin = start[u] + durations[u]
        for v in succ[u]:
            if fin > start[v]:
                start[v] = fin
            indeg[v] -= 1
            if indeg[v] == 0:
                ready.append(v)
    return start if seen == graph.n else None


def fmax_feasible(graph: TaskGraph, power: PowerModel, config: Configuration) -> bool:
    dur = {t.id: t.workload / power.f_max for t in graph.tasks}
    start = _asap(graph, config, dur)
    if start is None:
        return False
    return all(start[u] + dur[u] <= graph.period + TIME_TOL for u in graph.ids)


# ---------------------------------------------------------------------------
# continuous subproblem


class _Subproblem:
    """LP pieces for one configuration, in scaled units (time: period,
    cycles: largest workload, energy: eunit)."""

    def __init__(self, graph: TaskGraph, power: PowerModel, config: Configuration):
        self.graph, self.power, self.config = graph, power, config
        ids = sorted(graph.ids)
        self.ids = ids
        self.pos = {u: i for i, u in enumerate(ids)}
        n, m = len(ids), power.m
        self.n, self.m = n, m
        Td = graph.period
        self.Td = Td
        self.cu = float(max(graph.workload(u) for u in ids))
        e_cyc = np.array(power.cycle_energies)
        self.eunit = self.cu * float(e_cyc.min())
        self.a = np.array([self.cu / (f * Td) for f in power.freqs])  # scaled duration per scaled cycle
        nv = n + n * m
        self.nv = nv
        self.c_exec = np.zeros(nv)
        for u in ids:
            self.c_exec[self._ncol(u)] = e_cyc * self.cu / self.eunit

        rows, senses, rhs = [], [], []

        def finish_row(u):
            r = np.zeros(nv)
            r[self.pos[u]] = 1.0
            r[self._ncol(u)] = self.a
            return r

        for u in ids:
            r = np.zeros(nv)
            r[self._ncol(u)] = 1.0
            rows.append(r); senses.append("="); rhs.append(graph.workload(u) / self.cu)
        for u in ids:
            rows.append(finish_row(u)); senses.append("<="); rhs.append(1.0)
        pairs = set(graph.edges)
        for seq in config.orders:
            pairs.update(zip(seq, seq[1:]))
        for u, v in sorted(pairs):
            r = finish_row(u)
            r[self.pos[v]] -= 1.0
            rows.append(r); senses.append("<="); rhs.append(0.0)
        self.base_rows = np.array(rows)
        self.base_senses = senses
        self.base_rhs = np.array(rhs)
        self.lo = np.zeros(nv)
        self.hi = np.concatenate([np.ones(n), np.repeat([graph.workload(u) / self.cu for u in ids], m)])

        # idle intervals: I = g @ x + g0 (in periods)
        self.intervals = []
        for k, seq in enumerate(config.orders, start=1):
            if not seq:
                continue
            busy_min = sum(graph.workload(u) for u in seq) / power.f_max
            upper = Td - busy_min  # seconds, bound on any idle interval of this processor
            g = -finish_row(seq[-1])
            g[self.pos[seq[0]]] += 1.0
            self.intervals.append((k, 0, g, 1.0, upper))
            for j, (u, v) in enumerate(zip(seq, seq[1:]), start=1):
                g = -finish_row(u)
                g[self.pos[v]] += 1.0
                self.intervals.append((k, j, g, 0.0, upper))
        self.G = np.array([iv[2] for iv in self.intervals]).reshape(len(self.intervals), nv)
        self.g0 = np.array([iv[3] for iv in self.intervals])
        self.upper = np.array([iv[4] for iv in self.intervals])
        # intervals that can never reach the break-even time cost exactly c*I
        self.never = self.upper < power.t_be - TIME_TOL
        with np.errstate(divide="ignore"):
            self.slope = np.where(self.never | (self.upper <= 0), power.c, power.e_sw / np.maximum(self.upper, 1e-300))

    def _ncol(self, u):
        p = self.pos[u]
        return slice(self.n + p * self.m, self.n + (p + 1) * self.m)

    def lengths(self, x: np.ndarray) -> np.ndarray:
        return (self.G @ x + self.g0) * self.Td

    def true_energy(self, x: np.ndarray) -> float:
        exec_e = float(self.c_exec @ x) * self.eunit
        p = self.power
        idle = 0.0
        for length in self.lengths(x):
            length = max(length, 0.0)
            idle += p.e_sw if (length >= TIME_TOL and switchable(p, length)) else p.c * length
        return exec_e + idle

    def relaxation(self, fixed: dict[int, int]) -> LinearProgram:
        """LP over start times and splits with the given sleep decisions fixed
        and a convex under-estimator of idle energy on the others."""
        p = self.power
        rows = [self.base_rows]
        senses = list(self.base_senses)
        rhs = [self.base_rhs]
        c = self.c_exec.copy()
        tbe = p.t_be / self.Td
        scale = self.Td / self.eunit
        for j in range(len(self.intervals)):
            state = fixed.get(j)
            g, g0 = self.G[j], self.g0[j]
            if state == 1:
                rows.append(g[None, :]); senses.append(">="); rhs.append([tbe - g0])
            elif state == 0:
                rows.append(g[None, :]); senses.append("<="); rhs.append([tbe - g0])
                c = c + p.c * scale * g
            else:
                c = c + self.slope[j] * scale * g
        return LinearProgram.build(c, np.vstack(rows), senses, np.concatenate(rhs), self.lo, self.hi)

    def objective_constant(self, fixed: dict[int, int]) -> float:
        p = self.power
        const = 0.0
        for j in range(len(self.intervals)):
            state = fixed.get(j)
            if state == 1:
                const += p.e_sw
            elif state == 0:
                const += p.c * self.g0[j] * self.Td
            else:
                const += self.slope[j] * self.g0[j] * self.Td
        return const

    def to_schedule(self, x: np.ndarray, K: int) -> Schedule:
        g = self.graph
        placements = []
        assign = self.config.assignment
        for u in self.ids:
            p = self.pos[u]
            cyc = np.maximum(x[self.n + p * self.m: self.n + (p + 1) * self.m], 0.0) * self.cu
            cyc = np.where(cyc < 1e-9 * self.cu, 0.0, cyc)
            cyc = cyc * (g.workload(u) / cyc.sum())
            start = min(max(float(x[p]), 0.0), 1.0) * self.Td
            placements.append(Placement(u, assign[u], start, tuple(float(v) for v in cyc)))
        return Schedule(g.period, K, self.power.freqs, tuple(placements))


def continuous_subproblem(
    graph: TaskGraph,
    power: PowerModel,
    config: Configuration,
    objective: str = "isct",
    cutoff: float = math.inf,
    node_limit: int | None = None,
) -> SubResult:
    """Best start times, frequency splits and sleep decisions for a fixed
    configuration.

    With ``objective="isct"`` the total energy is minimised exactly. With
    ``"isc+t"`` only execution energy counts; among those optima the earliest
    start times are taken, and sleep decisions are left to post-processing.
    Branch-and-bound nodes whose bound exceeds ``cutoff`` are dropped; if
    nothing at or below the cutoff exists the status is ``cutoff``.
    """
    K = config.processors
    if graph.n == 0:
        return SubResult("optimal", Schedule(graph.period, K, power.freqs, ()), 0.0, 0)
    if not fmax_feasible(graph, power, config):
        return SubResult("infeasible")
    sub = _Subproblem(graph, power, config)
    if objective == "isc+t":
        return _baseline_subproblem(sub, K)
    if objective != "isct":
        raise ValueError(f"unknown objective {objective!r}")

    best_e, best_x = math.inf, None
    counter = itertools.count()
    heap = [(-math.inf, next(counter), {})]
    nodes = 0
    while heap:
        bound, _, fixed = heapq.heappop(heap)
        limit = min(best_e - REL_TOL * best_e, cutoff)
        if bound > limit:
            continue
        if node_limit is not None and nodes >= node_limit:
            return _finish(sub, K, best_e, best_x, nodes, cutoff, budget=True)
        nodes += 1
        out = solve_lp(sub.relaxation(fixed))
        if out.status != "optimal":
            continue
        lp_val = out.objective * sub.eunit + sub.objective_constant(fixed)
        if lp_val > min(best_e - REL_TOL * best_e, cutoff):
            continue
        true_e = sub.true_energy(out.x)
        if true_e < best_e:
            best_e, best_x = true_e, out.x
        lengths = sub.lengths(out.x)
        branch, gap_max = -1, REL_TOL * max(true_e, 1e-300)
        for j, length in enumerate(lengths):
            if j in fixed or sub.never[j]:
                continue
            length = max(length, 0.0)
            real = power.e_sw if (length >= TIME_TOL and switchable(power, length)) else power.c * length
            gap = real - sub.slope[j] * length
            if gap > gap_max:
                branch, gap_max = j, gap
        if branch < 0:
            continue  # relaxation is tight here
        for state in (1, 0):
            child = dict(fixed)
            child[branch] = state
            heapq.heappush(heap, (lp_val, next(counter), child))
    return _finish(sub, K, best_e, best_x, nodes, cutoff)


def _finish(sub, K, best_e, best_x, nodes, cutoff, budget=False) -> SubResult:
    if best_x is None or best_e > cutoff:
        status = "budget" if budget else ("infeasible" if math.isinf(cutoff) else "cutoff")
        return SubResult(status, nodes=nodes)
    sched = sub.to_schedule(best_x, K)
    sched = sched.with_switches(optimal_switches(sub.power, sched))
    return SubResult("budget" if budget else "optimal", sched, best_e, nodes)


def _baseline_subproblem(sub: _Subproblem, K: int) -> SubResult:
    lp = LinearProgram.build(sub.c_exec, sub.base_rows, sub.base_senses, sub.base_rhs, sub.lo, sub.hi)
    first = solve_lp(lp)
    if first.status != "optimal":
        return SubResult("infeasible", nodes=1)
    # second pass: earliest starts among execution-energy optima
    cap = first.objective + REL_TOL * max(abs(first.objective), 1.0)
    c2 = np.zeros(sub.nv)
    c2[: sub.n] = 1.0
    lp2 = LinearProgram.build(
        c2,
        np.vstack([sub.base_rows, sub.c_exec[None, :]]),
        list(sub.base_senses) + ["<="],
        np.concatenate([sub.base_rhs, [cap]]),
        sub.lo, sub.hi,
    )
    second = solve_lp(lp2)
    x = second.x if second.status == "optimal" else first.x
    sched = sub.to_schedule(x, K)
    exec_e = float(sub.c_exec @ x) * sub.eunit
    return SubResult("optimal", sched, exec_e, 2)


# ---------------------------------------------------------------------------
# configuration enumeration


def canonical_assignments(n: int, K: int):
    """Assignments of tasks 1..n to processors, one per relabelling class:
    labels appear in first-use order (restricted growth strings)."""
    if n == 0:
        yield ()
        return
    a = [0] * n

    def rec(i, top):
        if i == n:
            yield tuple(a)
            return
        for lab in range(min(top + 2, K)):
            a[i] = lab
            yield from rec(i + 1, max(top, lab))

    yield from rec(1, 0)


def _linear_extensions(tasks: list[int], reach: dict[int, frozenset[int]]):
    """Orders of ``tasks`` compatible with the DAG, in lexicographic order."""
    tasks = sorted(tasks)
    before = {u: {w for w in tasks if u in reach[w]} for u in tasks}
    placed: list[int] = []
    done: set[int] = set()

    def rec():
        if len(placed) == len(tasks):
            yield tuple(placed)
            return
        for u in tasks:
            if u not in done and before[u] <= done:
                placed.append(u)
                done.add(u)
                yield from rec()
                placed.pop()
                done.discard(u)

    yield from rec()


def configurations_for(graph: TaskGraph, assignment: tuple[int, ...], K: int, reach=None):
    """Every DAG-consistent configuration for one assignment, lexicographic."""
    reach = reach if reach is not None else reachability(graph)
    ids = sorted(graph.ids)
    groups = [[u for u, lab in zip(ids, assignment) if lab == k] for k in range(K)]
    per_proc = [list(_linear_extensions(g, reach)) for g in groups]
    for combo in itertools.product(*per_proc):
        cfg = Configuration(tuple(combo))
        if _asap(graph, cfg, {u: 0.0 for u in ids}) is not None:
            yield cfg


def processor_bound(power: PowerModel, workload: float, period: float) -> float:
    """Least energy one processor can spend on ``workload`` cycles in a period,
    ignoring precedence: all idle time merged into a single interval."""
    if workload <= 0:
        return 0.0
    env = exec_envelope(power, workload)
    lo, hi = env.d_min, min(env.d_max, period)
    if lo > period + TIME_TOL:
        return math.inf
    cand = {lo, hi}
    cand.update(d for d, _ in env.breakpoints if lo <= d <= hi)
    edge = period - power.t_be
    if lo <= edge <= hi:
        cand.add(edge)
    best = math.inf
    for d in cand:
        idle = max(period - d, 0.0)
        if idle < TIME_TOL:
            e_idle = 0.0
        elif switchable(power, idle):
            e_idle = power.e_sw
        else:
            e_idle = power.c * idle
        best = min(best, env.energy_at(d) + e_idle)
    return best


def assignment_bound(graph: TaskGraph, power: PowerModel, assignment: tuple[int, ...], K: int) -> float:
    ids = sorted(graph.ids)
    load = [0.0] * K
    for u, lab in zip(ids, assignment):
        load[lab] += graph.workload(u)
    return sum(processor_bound(power, w, graph.period) for w in load)


# ---------------------------------------------------------------------------
# exact search


def _better(e1, k1, e2, k2) -> bool:
    tol = REL_TOL * max(abs(e1), abs(e2), 1e-300) if math.isfinite(e2) else 0.0
    if e1 < e2 - tol:
        return True
    return abs(e1 - e2) <= tol and k1 < k2


def _evaluate_assignment(graph, power, assignment, K, lb, best_e, best_key, node_cap):
    """Best configuration of one assignment that can beat (best_e, best_key)."""
    found_e, found_key, found_sched = best_e, best_key, None
    nodes = 0
    configs = 0
    reach = reachability(graph)
    for cfg in configurations_for(graph, assignment, K, reach):
        tol = REL_TOL * max(found_e, 1e-300) if math.isfinite(found_e) else 0.0
        if found_e <= lb + tol and found_key is not None and found_key < cfg.key:
            break  # nothing later in this assignment can win
        if not fmax_feasible(graph, power, cfg):
            continue
        configs += 1
        cutoff = found_e + tol if (found_key is None or cfg.key < found_key) else found_e - tol
        res = continuous_subproblem(graph, power, cfg, cutoff=cutoff,
                                    node_limit=None if node_cap is None else max(1, node_cap - nodes))
        nodes += res.nodes
        if res.schedule is not None and _better(res.energy, cfg.key, found_e, found_key if found_key is not None else ()):
            found_e, found_key, found_sched = res.energy, cfg.key, res.schedule
        if node_cap is not None and nodes >= node_cap:
            return found_e, found_key, found_sched, nodes, configs, True
    return found_e, found_key, found_sched, nodes, configs, False


def _evaluate_job(args):
    return _evaluate_assignment(*args)


BATCH = 8


def exact_schedule(
    graph: TaskGraph,
    power: PowerModel,
    K: int,
    limits: ExactLimits | None = None,
    objective: str = "isct",
    threads: int = 1,
) -> ExactResult:
    """Globally optimal schedule over all configurations.

    Ties within a relative 1e-9 go to the lexicographically smallest
    configuration key. Work is split into fixed batches of assignments that
    all see the incumbent from the start of the batch, so the answer does not
    depend on ``threads``.
    """
    limits = limits or ExactLimits()
    _check_scale(graph, power, K, limits)
    t0 = time.perf_counter()
    if graph.n == 0:
        empty = Schedule(graph.period, K, power.freqs, ())
        return ExactResult(empty, 0.0, True)
    if objective == "isc+t":
        return _exact_baseline(graph, power, K, limits, t0)
    if objective != "isct":
        raise ValueError(f"unknown objective {objective!r}")

    scored = []
    for a in canonical_assignments(graph.n, K):
        lb = assignment_bound(graph, power, a, K)
        if math.isfinite(lb):
            scored.append((lb, a))
    scored.sort()
    best_e, best_key, best_sched = math.inf, None, None
    nodes = configs = 0
    optimal = True
    pool = ProcessPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for start in range(0, len(scored), BATCH):
            batch = scored[start: start + BATCH]
            tol = REL_TOL * best_e if math.isfinite(best_e) else 0.0
            if batch[0][0] > best_e + tol:
                break
            if nodes >= limits.node_budget or time.perf_counter() - t0 > limits.time_budget:
                optimal = False
                break
            cap = limits.node_budget - nodes
            jobs = [
                (graph, power, a, K, lb, best_e, best_key, cap)
                for lb, a in batch
                if not (lb > best_e + tol or (best_key is not None and lb >= best_e - tol and _assign_key(a, K) > best_key))
            ]
            results = list(pool.map(_evaluate_job, jobs)) if pool else [_evaluate_job(j) for j in jobs]
            for e, key, sched, nn, cc, hit in results:
                nodes += nn
                configs += cc
                optimal = optimal and not hit
                if sched is not None and _better(e, key, best_e, best_key if best_key is not None else ()):
                    best_e, best_key, best_sched = e, key, sched
            if not optimal:
                break
    finally:
        if pool:
            pool.shutdown()
    if best_sched is None:
        if not optimal:
            raise ExactBudgetError("budget exhausted before any feasible schedule was found")
        raise InfeasibleError("no configuration meets the deadline")
    return ExactResult(best_sched, best_e, optimal, nodes, configs, time.perf_counter() - t0)


class ExactBudgetError(RuntimeError):
    pass


def _assign_key(assignment: tuple[int, ...], K: int) -> tuple:
    """Smallest configuration key any order of this assignment can have."""
    groups = [[] for _ in range(K)]
    for u, lab in enumerate(assignment, start=1):
        groups[lab].append(u)
    # the key of a configuration starts with processor 1's order; sorted
    # groups give a lower bound only for tuples compared elementwise
    return tuple(tuple(sorted(g)) for g in groups)


def _check_scale(graph, power, K, limits):
    problems = validate(graph)
    if problems:
        raise ValueError("; ".join(p.message for p in problems))
    if K < 1:
        raise ValueError("need at least one processor")
    if limits.force:
        return
    # relabelling symmetry means at most n processors ever matter
    if graph.n > limits.max_tasks or min(K, graph.n) > limits.max_processors or power.m > limits.max_levels:
        raise ExactScaleError(
            f"instance (n={graph.n}, K={K}, m={power.m}) exceeds exact caps "
            f"(n<={limits.max_tasks}, K<={limits.max_processors}, m<={limits.max_levels}); use force"
        )


def _exact_baseline(graph, power, K, limits, t0) -> ExactResult:
    """Minimum execution energy; earliest start times break ties, then the
    configuration key."""
    e_cyc = power.cycle_energies
    e_min = min(e_cyc)
    fast = max(i for i, e in enumerate(e_cyc) if e == e_min)  # fastest most-efficient level
    dur_fast = {t.id: t.workload / power.freqs[fast] for t in graph.tasks}
    reach = reachability(graph)
    best = None  # (sum_starts, key, cfg, starts)
    feasible = []
    n_cfg = 0
    for a in canonical_assignments(graph.n, K):
        for cfg in configurations_for(graph, a, K, reach):
            n_cfg += 1
            starts = _asap(graph, cfg, dur_fast)
            if all(starts[u] + dur_fast[u] <= graph.period + TIME_TOL for u in graph.ids):
                total = sum(starts.values())
                cand = (total, cfg.key)
                if best is None or total < best[0] - TIME_TOL or (abs(total - best[0]) <= TIME_TOL and cfg.key < best[1]):
                    best = (total, cfg.key, cfg, starts)
            elif best is None and fmax_feasible(graph, power, cfg):
                feasible.append(cfg)
        if time.perf_counter() - t0 > limits.time_budget:
            raise ExactBudgetError("time budget exhausted while enumerating configurations")
    if best is not None:
        _, _, cfg, starts = best
        assign = cfg.assignment
        placements = []
        for t in graph.tasks:
            cyc = [0.0] * power.m
            cyc[fast] = float(t.workload)
            placements.append(Placement(t.id, assign[t.id], starts[t.id], tuple(cyc)))
        sched = Schedule(graph.period, K, power.freqs, tuple(placements))
        energy = sum(t.workload for t in graph.tasks) * e_min
        return ExactResult(sched, energy, True, 0, n_cfg, time.perf_counter() - t0)
    # deadline too tight for the most efficient level everywhere
    chosen = None
    nodes = 0
    for cfg in feasible:
        res = continuous_subproblem(graph, power, cfg, objective="isc+t")
        nodes += res.nodes
        if res.schedule is None:
            continue
        total = sum(p.start for p in res.schedule.placements)
        cand = (res.energy, total, cfg.key, res.schedule)
        if chosen is None or _baseline_better(cand, chosen):
            chosen = cand
    if chosen is None:
        raise InfeasibleError("no configuration meets the deadline")
    return ExactResult(chosen[3], chosen[0], True, nodes, n_cfg, time.perf_counter() - t0)


def _baseline_better(a, b) -> bool:
    tol = REL_TOL * max(a[0], b[0])
    if a[0] < b[0] - tol:
        return True
    if a[0] > b[0] + tol:
        return False
    if a[1] < b[1] - TIME_TOL:
        return True
    if a[1] > b[1] + TIME_TOL:
        return False
    return a[2] < b[2]


# ---------------------------------------------------------------------------
# independent bracketing oracle


@dataclass(frozen=True)
class Bracket:
    lower: float
    upper: float

    def contains(self, value: float, tol: float = 1e-12) -> bool:
        return self.lower - tol <= value <= self.upper + tol


def discretized_oracle(
    graph: TaskGraph,
    power: PowerModel,
    K: int,
    cycle_granularity: int = 1000,
    time_granularity: float = 1e-9,
) -> Bracket:
    """Energy bracket by brute force, independent of the simplex and of the
    branch-and-bound above.

    Every plain assignment (no symmetry reduction) and every DAG-consistent
    order is tried. Each one is solved as a small MILP by HiGHS with the sleep
    decisions as binaries and a big-M epigraph for idle energy; the deadline
    is relaxed by ``time_granularity`` so the minimum is a safe lower bound.
    The upper bound snaps the best split to the cycle grid (spill-over goes
    to the fastest level, which never lengthens a task) and re-prices it.
    """
    from scipy.optimize import Bounds, LinearConstraint, milp

    if graph.n > 4 or power.m > 3 or K > 3:
        raise ExactScaleError("oracle is limited to n <= 4, m <= 3, K <= 3")
    if graph.n == 0:
        return Bracket(0.0, 0.0)
    ids = sorted(graph.ids)
    n, m = len(ids), power.m
    pos = {u: i for i, u in enumerate(ids)}
    ms, mc = 1e3, 1e-6  # seconds -> ms, cycles -> Mcycles; energy in mJ
    Td = graph.period * ms
    tbe = power.t_be * ms
    c_idle = power.c  # W == mJ/ms
    e_sw = power.e_sw * 1e3
    dur = [ms / (f * mc) for f in power.freqs]  # ms per Mcycle
    e_cyc = [e * 1e3 / mc for e in power.cycle_energies]  # mJ per Mcycle
    reach = reachability(graph)

    lower = upper = math.inf
    for assign in itertools.product(range(K), repeat=n):
        groups = [[u for u in ids if assign[pos[u]] == k] for k in range(K)]
        per_proc = [list(_linear_extensions(grp, reach)) for grp in groups]
        for combo in itertools.product(*per_proc):
            cfg = Configuration(tuple(combo))
            if _asap(graph, cfg, {u: 0.0 for u in ids}) is None:
                continue
            gaps = []  # (tasks before, task after, wraps)
            for seq in combo:
                if seq:
                    gaps.append((seq[-1], seq[0], True))
                    gaps += [(u, v, False) for u, v in zip(seq, seq[1:])]
            ng = len(gaps)
            # columns: start[n], cyc[n*m], sw[ng], y[ng]
            nv = n + n * m + 2 * ng
            S = lambda u: pos[u]
            N = lambda u, i: n + pos[u] * m + i
            SW = lambda j: n + n * m + j
            Y = lambda j: n + n * m + ng + j
            A, lo_b, hi_b = [], [], []

            def row(entries, lo, hi):
                r = np.zeros(nv)
                for col, val in entries:
                    r[col] += val
                A.append(r); lo_b.append(lo); hi_b.append(hi)

            def fin(u):
                return [(S(u), 1.0)] + [(N(u, i), dur[i]) for i in range(m)]

            for u in ids:
                row([(N(u, i), 1.0) for i in range(m)], graph.workload(u) * mc, graph.workload(u) * mc)
                row(fin(u), -np.inf, Td + time_granularity * ms)
            pairs = set(graph.edges) | {(u, v) for seq in combo for u, v in zip(seq, seq[1:])}
            for u, v in sorted(pairs):
                row(fin(u) + [(S(v), -1.0)], -np.inf, 0.0)
            for j, (u, v, wrap) in enumerate(gaps):
                # idle = start_v - finish_u (+ Td when wrapping)
                base = [(S(v), 1.0)] + [(col, -val) for col, val in fin(u)]
                shift = Td if wrap else 0.0
                row(base + [(SW(j), -tbe)], -shift, np.inf)  # I >= tbe*sw
                row(base + [(SW(j), -Td)], -np.inf, tbe - shift)  # I <= tbe + Td*sw
                row([(Y(j), 1.0)] + [(col, -c_idle * val) for col, val in base] + [(SW(j), c_idle * Td)],
                    c_idle * shift, np.inf)  # y >= c*I - c*Td*sw
                row([(Y(j), 1.0), (SW(j), -e_sw)], 0.0, np.inf)  # y >= e_sw*sw
            cost = np.zeros(nv)
            for u in ids:
                for i in range(m):
                    cost[N(u, i)] = e_cyc[i]
            cost[n + n * m + ng:] = 1.0
            integrality = np.zeros(nv)
            integrality[n + n * m: n + n * m + ng] = 1
            lb = np.zeros(nv)
            ub = np.full(nv, np.inf)
            ub[:n] = Td
            ub[n + n * m: n + n * m + ng] = 1.0
            res = milp(cost, constraints=LinearConstraint(np.array(A), lo_b, hi_b), integrality=integrality,
                       bounds=Bounds(lb, ub), options={"mip_rel_gap": 1e-9})
            if res.status != 0 or res.x is None:
                continue
            bound = getattr(res, "mip_dual_bound", None)
            bound = res.fun if bound is None or not np.isfinite(bound) else min(bound, res.fun)
            lower = min(lower, bound * 1e-3)
            upper = min(upper, _grid_price(graph, power, combo, res.x, n, m, pos, cycle_granularity))
    if not math.isfinite(lower):
        raise InfeasibleError("no configuration meets the deadline")
    return Bracket(lower, max(upper, lower))


def _grid_price(graph, power, orders, x, n, m, pos, grid) -> float:
    """True energy (J) of an oracle solution after snapping splits to the grid."""
    Td = graph.period
    fast = m - 1
    start, finish, energy = {}, {}, 0.0
    for u in graph.ids:
        p = pos[u]
        cyc = [max(0.0, x[n + p * m + i]) * 1e6 for i in range(m)]
        snapped = [math.floor(v / grid) * grid for v in cyc]
        snapped[fast] += graph.workload(u) - sum(snapped)
        start[u] = max(0.0, x[p] * 1e-3)
        finish[u] = start[u] + sum(c / f for c, f in zip(snapped, power.freqs))
        energy += sum(c * e for c, e in zip(snapped, power.cycle_energies))
    if any(finish[u] > Td + TIME_TOL for u in graph.ids):
        return math.inf
    for seq in orders:
        if not seq:
            continue
        gaps = [start[seq[0]] + Td - finish[seq[-1]]]
        gaps += [start[v] - finish[u] for u, v in zip(seq, seq[1:])]
        for gap in gaps:
            if gap < -TIME_TOL:
                return math.inf
            gap = max(gap, 0.0)
            if gap >= max(power.t_sw, power.e_sw / power.c if power.c > 0 else 0.0) - TIME_TOL and gap > TIME_TOL:
                energy += power.e_sw
            else:
                energy += power.c * gap
    return energy
