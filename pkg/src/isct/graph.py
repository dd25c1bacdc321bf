"""Periodic task graphs: data model, validation, text I/O, random generation
and upward ranks."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable


class GraphError(ValueError):
    pass


class CycleError(GraphError):
    def __init__(self, member: int):
        super().__init__(f"task graph has a directed cycle through task {member}")
        self.member = member


class ParseError(GraphError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class Task:
    id: int
    workload: int  # processor cycles


@dataclass(frozen=True)
class TaskGraph:
    tasks: tuple[Task, ...]
    edges: tuple[tuple[int, int], ...]
    period: float  # seconds; also the hard deadline

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))

    @property
    def n(self) -> int:
        return len(self.tasks)

    @property
    def ids(self) -> list[int]:
        return [t.id for t in self.tasks]

    def workload(self, task_id: int) -> int:
        return self._by_id[task_id].workload

    @property
    def total_workload(self) -> int:
        return sum(t.workload for t in self.tasks)

    @property
    def _by_id(self) -> dict[int, Task]:
        cache = self.__dict__.get("_cache_by_id")
        if cache is None:
            cache = {t.id: t for t in self.tasks}
            object.__setattr__(self, "_cache_by_id", cache)
        return cache

    def successors(self) -> dict[int, list[int]]:
        succ: dict[int, list[int]] = {t.id: [] for t in self.tasks}
        for u, v in self.edges:
            succ.setdefault(u, []).append(v)
        return {u: sorted(vs) for u, vs in succ.items()}

    def predecessors(self) -> dict[int, list[int]]:
        pred: dict[int, list[int]] = {t.id: [] for t in self.tasks}
        for u, v in self.edges:
            pred.setdefault(v, []).append(u)
        return {v: sorted(us) for v, us in pred.items()}

    def canonical(self) -> "TaskGraph":
        return TaskGraph(
            tasks=tuple(sorted(self.tasks, key=lambda t: t.id)),
            edges=tuple(sorted(set(self.edges))),
            period=self.period,
        )


@dataclass(frozen=True)
class Violation:
    rule: str
    ids: tuple[int, ...]
    message: str


# rule ids fix the reporting order of validate()
_RULES = ("period", "ids", "workload", "dangling", "self-loop", "duplicate", "cycle")


def validate(graph: TaskGraph) -> list[Violation]:
    """Return every invariant violation, sorted by rule then ids."""
    out: list[Violation] = []
    if not graph.period > 0:
        out.append(Violation("period", (), f"period must be positive, got {graph.period}"))
    ids = [t.id for t in graph.tasks]
    if sorted(ids) != list(range(1, len(ids) + 1)):
        out.append(Violation("ids", tuple(sorted(ids)), "task ids must be exactly 1..n"))
    for t in graph.tasks:
        if t.workload < 1:
            out.append(Violation("workload", (t.id,), f"task {t.id} has nonpositive workload {t.workload}"))
    known = set(ids)
    seen: set[tuple[int, int]] = set()
    for u, v in graph.edges:
        if u not in known or v not in known:
            out.append(Violation("dangling", (u, v), f"edge ({u},{v}) references an unknown task"))
        elif u == v:
            out.append(Violation("self-loop", (u, v), f"edge ({u},{v}) is a self loop"))
        elif (u, v) in seen:
            out.append(Violation("duplicate", (u, v), f"edge ({u},{v}) appears twice"))
        seen.add((u, v))
    member = _find_cycle_member(known, [(u, v) for u, v in graph.edges if u in known and v in known and u != v])
    if member is not None:
        out.append(Violation("cycle", (member,), f"directed cycle through task {member}"))
    out.sort(key=lambda x: (_RULES.index(x.rule), x.ids))
    return out


def _find_cycle_member(nodes: Iterable[int], edges: list[tuple[int, int]]) -> int | None:
    order = _kahn(nodes, edges)
    if order is None:
        indeg = {u: 0 for u in nodes}
        for _, v in edges:
            indeg[v] += 1
        # peel sources; whatever remains lies on or behind a cycle
        remaining = set(indeg)
        succ: dict[int, list[int]] = {u: [] for u in remaining}
        for u, v in edges:
            succ[u].append(v)
        stack = [u for u in remaining if indeg[u] == 0]
        while stack:
            u = stack.pop()
            remaining.discard(u)
            for v in succ[u]:
                indeg[v] -= 1
                if indeg[v] == 0:
                    stack.append(v)
        return min(remaining)
    return None


def _kahn(nodes: Iterable[int], edges: Iterable[tuple[int, int]]) -> list[int] | None:
    import heapq

    nodes = list(nodes)
    indeg = {u: 0 for u in nodes}
    succ: dict[int, list[int]] = {u: [] for u in nodes}
    for u, v in edges:
        succ[u].append(v)
        indeg[v] += 1
    heap = [u for u in nodes if indeg[u] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        u = heapq.heappop(heap)
        order.append(u)
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(heap, v)
    return order if len(order) == len(nodes) else None


def topological_order(graph: TaskGraph) -> list[int]:
    """Topological order with ties broken by ascending id."""
    order = _kahn(graph.ids, graph.edges)
    if order is None:
        raise CycleError(_find_cycle_member(graph.ids, list(graph.edges)))
    return order


def upward_ranks(graph: TaskGraph, f_max: float) -> dict[int, float]:
    """Critical-path length (seconds at f_max) from each task to an exit task,
    the task's own execution included."""
    if not f_max > 0:
        raise ValueError("f_max must be positive")
    succ = graph.successors()
    rank: dict[int, float] = {}
    for u in reversed(topological_order(graph)):
        tail = max((rank[v] for v in succ[u]), default=0.0)
        rank[u] = graph.workload(u) / f_max + tail
    return rank


def rank_order(graph: TaskGraph, f_max: float, seed: int | None = None) -> list[int]:
    """Tasks by decreasing upward rank. Ties go to the lower id unless a seed
    asks for a random tie-break."""
    rank = upward_ranks(graph, f_max)
    if seed is None:
        return sorted(rank, key=lambda u: (-rank[u], u))
    rng = random.Random(seed)
    jitter = {u: rng.random() for u in sorted(rank)}
    return sorted(rank, key=lambda u: (-_rounded(rank[u]), jitter[u]))


def _rounded(x: float) -> float:
    # equal-workload paths may differ in the last ulp
    return float(f"{x:.12g}")


def critical_path(graph: TaskGraph, f: float) -> float:
    """Longest path length in seconds when every task runs at frequency f."""
    return max(upward_ranks(graph, f).values(), default=0.0)


def reachability(graph: TaskGraph) -> dict[int, frozenset[int]]:
    """Map each task to the set of tasks reachable from it (excluding itself)."""
    succ = graph.successors()
    reach: dict[int, frozenset[int]] = {}
    for u in reversed(topological_order(graph)):
        acc: set[int] = set()
        for v in succ[u]:
            acc.add(v)
            acc |= reach[v]
        reach[u] = frozenset(acc)
    return reach


# ---------------------------------------------------------------------------
# random generation


@dataclass(frozen=True)
class GenParams:
    task_count: int
    mean_workload: float = 2e6
    workload_spread: float = 0.5
    max_in_degree: int = 2
    max_out_degree: int = 3
    period: float = 8e-3
    seed: int = 0
    extra_edge_prob: float = 0.3

    def __post_init__(self):
        if self.task_count < 0:
            raise ValueError("task_count must be >= 0")
        if not 0 <= self.workload_spread < 1:
            raise ValueError("workload_spread must lie in [0, 1)")
        if self.max_in_degree < 1 or self.max_out_degree < 1:
            raise ValueError("degree caps must be >= 1")
        if not self.period > 0:
            raise ValueError("period must be positive")
        if self.mean_workload < 1:
            raise ValueError("mean_workload must be >= 1")


def random_taskgraph(params: GenParams) -> TaskGraph:
    """TGFF-like DAG grown from a single root under in/out-degree caps.

    Task i attaches to a uniformly drawn earlier task with spare out-degree;
    extra forward edges are then tried with probability ``extra_edge_prob``.
    Edges always point from lower to higher id, so the result is acyclic.
    """
    rng = random.Random(params.seed)
    n = params.task_count
    lo = params.mean_workload * (1 - params.workload_spread)
    hi = params.mean_workload * (1 + params.workload_spread)
    workloads = [max(1, round(rng.uniform(lo, hi))) for _ in range(n)]

    indeg = [0] * (n + 1)
    outdeg = [0] * (n + 1)
    edges: set[tuple[int, int]] = set()
    for v in range(2, n + 1):
        parents = [u for u in range(1, v) if outdeg[u] < params.max_out_degree]
        if not parents:
            continue  # every earlier task is saturated: v starts a new component
        u = rng.choice(parents)
        edges.add((u, v))
        outdeg[u] += 1
        indeg[v] += 1
        while indeg[v] < params.max_in_degree and rng.random() < params.extra_edge_prob:
            extra = [w for w in range(1, v) if outdeg[w] < params.max_out_degree and (w, v) not in edges]
            if not extra:
                break
            w = rng.choice(extra)
            edges.add((w, v))
            outdeg[w] += 1
            indeg[v] += 1
    return TaskGraph(
        tasks=tuple(Task(i + 1, w) for i, w in enumerate(workloads)),
        edges=tuple(sorted(edges)),
        period=params.period,
    )


# ---------------------------------------------------------------------------
# text format

_TIME_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6}


def parse_time(text: str) -> float:
    """Parse '8ms', '8 ms', '0.008s' or a bare number of seconds."""
    text = text.strip()
    for unit in ("ms", "us", "s"):
        if text.endswith(unit):
            return float(text[: -len(unit)]) * _TIME_UNITS[unit]
    return float(text)


def load_graph(text: str, check: bool = True) -> TaskGraph:
    lines = text.splitlines()
    header_seen = False
    period: float | None = None
    tasks: list[Task] = []
    edges: list[tuple[int, int]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if not header_seen:
            if parts != ["taskgraph", "v1"]:
                raise ParseError(lineno, "expected header 'taskgraph v1'")
            header_seen = True
            continue
        try:
            if parts[0] == "period" and len(parts) == 3:
                if parts[2] not in _TIME_UNITS:
                    raise ParseError(lineno, f"unknown time unit {parts[2]!r}")
                period = float(parts[1]) * _TIME_UNITS[parts[2]]
            elif parts[0] == "task" and len(parts) == 3:
                tasks.append(Task(int(parts[1]), int(parts[2])))
            elif parts[0] == "edge" and len(parts) == 3:
                edges.append((int(parts[1]), int(parts[2])))
            else:
                raise ParseError(lineno, f"cannot parse {line!r}")
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(lineno, f"cannot parse {line!r}") from None
    if not header_seen:
        raise ParseError(1, "empty task-graph file")
    if period is None:
        raise ParseError(len(lines), "missing 'period' line")
    graph = TaskGraph(tuple(tasks), tuple(edges), period)
    if check:
        problems = validate(graph)
        if problems:
            raise GraphError("; ".join(p.message for p in problems))
    return graph


def _format_period(seconds: float) -> str:
    ms = seconds * 1e3
    return f"period {ms:.12g} ms"


def save_graph(graph: TaskGraph) -> str:
    g = graph.canonical()
    lines = ["taskgraph v1", _format_period(g.period)]
    lines += [f"task {t.id} {t.workload}" for t in g.tasks]
    lines += [f"edge {u} {v}" for u, v in g.edges]
    return "\n".join(lines) + "\n"


def to_dot(graph: TaskGraph) -> str:
    g = graph.canonical()
    lines = ["digraph taskgraph {", f'  label="period {g.period * 1e3:.6g} ms";']
    lines += [f'  t{t.id} [label="{t.id}\\n{t.workload} cyc"];' for t in g.tasks]
    lines += [f"  t{u} -> t{v};" for u, v in g.edges]
    lines.append("}")
    return "\n".join(lines) + "\n"
