"""Fully linearised MILP for joint scheduling, frequency splitting and sleep
decisions, plus LP-file export and an independent solution check.

Models are built in milliseconds, megacycles and millijoules so that
coefficients stay near 1 in exported files. Every derived variable (products
and defined quantities) records its definition, which lets a schedule be
turned into a complete solution and every row be checked against it.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field

from .evaluate import Placement, Schedule, idle_intervals, schedule_energy, schedule_violations
from .graph import TaskGraph, validate
from .power import TIME_TOL, PowerModel, switchable

MS = 1e3  # seconds -> ms
MCYC = 1e-6  # cycles -> Mcycles
MJ = 1e3  # J -> mJ


class ModelError(ValueError):
    pass


class SolutionParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class VarRef:
    name: str
    kind: str = "continuous"  # continuous | binary
    lo: float = 0.0
    hi: float = math.inf


class LinExpr:
    """Sparse linear expression; terms keep insertion order for stable output."""

    __slots__ = ("terms", "const")

    def __init__(self, terms=None, const: float = 0.0):
        self.terms: dict[str, float] = {}
        self.const = float(const)
        for name, coef in (terms.items() if isinstance(terms, dict) else (terms or ())):
            self.add(name, coef)

    @classmethod
    def of(cls, x) -> "LinExpr":
        if isinstance(x, LinExpr):
            return x
        if isinstance(x, VarRef):
            return cls({x.name: 1.0})
        if isinstance(x, str):
            return cls({x: 1.0})
        return cls(const=float(x))

    def add(self, name: str, coef: float) -> "LinExpr":
        self.terms[name] = self.terms.get(name, 0.0) + float(coef)
        return self

    def copy(self) -> "LinExpr":
        out = LinExpr(const=self.const)
        out.terms = dict(self.terms)
        return out

    def __add__(self, other) -> "LinExpr":
        other = LinExpr.of(other)
        out = self.copy()
        for name, coef in other.terms.items():
            out.add(name, coef)
        out.const += other.const
        return out

    __radd__ = __add__

    def __neg__(self) -> "LinExpr":
        return self * -1.0

    def __sub__(self, other) -> "LinExpr":
        return self + (-LinExpr.of(other))

    def __rsub__(self, other) -> "LinExpr":
        return LinExpr.of(other) - self

    def __mul__(self, k: float) -> "LinExpr":
        out = LinExpr(const=self.const * k)
        out.terms = {n: c * k for n, c in self.terms.items()}
        return out

    __rmul__ = __mul__

    def value(self, sol: dict[str, float]) -> float:
        return self.const + sum(c * sol[n] for n, c in self.terms.items())

    def __repr__(self) -> str:
        return f"LinExpr({self.terms}, {self.const})"


@dataclass
class Constraint:
    name: str
    family: str
    expr: LinExpr  # expr (sense) rhs, constant folded into rhs on export
    sense: str  # <= | >= | =
    rhs: float = 0.0

    def slack(self, sol: dict[str, float]) -> float:
        """Violation amount (0 when satisfied)."""
        lhs = self.expr.value(sol)
        if self.sense == "<=":
            return max(0.0, lhs - self.rhs)
        if self.sense == ">=":
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


@dataclass
class MilpModel:
    variables: list[VarRef] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    objective: LinExpr = field(default_factory=LinExpr)
    # derived variable -> ("expr", LinExpr) or ("product", LinExpr, LinExpr)
    definitions: dict[str, tuple] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self._index = {v.name: v for v in self.variables}
        self._family_seq: dict[str, int] = {}

    # -- building ----------------------------------------------------------

    def var(self, name: str, kind: str = "continuous", lo: float = 0.0, hi: float = math.inf) -> VarRef:
        if name in self._index:
            raise ModelError(f"duplicate variable {name}")
        if kind == "binary":
            lo, hi = 0.0, 1.0
        v = VarRef(name, kind, lo, hi)
        self.variables.append(v)
        self._index[name] = v
        return v

    def add(self, family: str, expr, sense: str, rhs: float = 0.0, name: str | None = None) -> Constraint:
        expr = LinExpr.of(expr)
        for n in expr.terms:
            if n not in self._index:
                raise ModelError(f"undeclared variable {n} in {family}")
        seq = self._family_seq.get(family, 0) + 1
        self._family_seq[family] = seq
        con = Constraint(name or f"{family}_{seq}", family, expr, sense, float(rhs))
        self.constraints.append(con)
        return con

    def __getitem__(self, name: str) -> VarRef:
        return self._index[name]

    def __contains__(self, name: str) -> bool:
        return name in self._index

    # -- inspection --------------------------------------------------------

    def family_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for c in self.constraints:
            out[c.family] = out.get(c.family, 0) + 1
        return out

    def names(self, prefix: str) -> list[str]:
        return [v.name for v in self.variables if v.name.startswith(prefix)]

    def evaluate_objective(self, sol: dict[str, float]) -> float:
        return self.objective.value(sol)

    def check(self, sol: dict[str, float], tol: float = 1e-6) -> list[str]:
        """Names of rows and bounds the solution violates by more than ``tol``
        (relative to the row's scale)."""
        bad = []
        for v in self.variables:
            x = sol[v.name]
            if x < v.lo - tol or x > v.hi + tol:
                bad.append(f"bound {v.name}")
            if v.kind == "binary" and min(abs(x), abs(x - 1)) > tol:
                bad.append(f"integrality {v.name}")
        for c in self.constraints:
            scale = 1.0 + abs(c.rhs) + sum(abs(k) for k in c.expr.terms.values())
            if c.slack(sol) > tol * scale:
                bad.append(c.name)
        return bad


# ---------------------------------------------------------------------------
# linearisation helpers


def linearize_bool_times_real(model: MilpModel, t_name: str, b, x, s1: float, s2: float, family: str) -> VarRef:
    """New variable t equal to b*x for binary-valued b and -s1 <= x <= s2."""
    if not (math.isfinite(s1) and math.isfinite(s2)):
        raise ModelError(f"{t_name}: product needs finite bounds on the real factor")
    b, x = LinExpr.of(b), LinExpr.of(x)
    t = model.var(t_name, lo=-s1, hi=s2)
    model.add(family, LinExpr.of(t) + b * s1, ">=", 0.0)  # -b*s1 <= t
    model.add(family, LinExpr.of(t) - b * s2, "<=", 0.0)  # t <= b*s2
    model.add(family, LinExpr.of(t) + b * s1 - x, "<=", s1)
    model.add(family, LinExpr.of(t) - b * s2 - x, ">=", -s2)
    model.definitions[t_name] = ("product", b, x)
    return t


def linearize_bool_times_bool(model: MilpModel, z_name: str, x, y, family: str) -> VarRef:
    """New binary z equal to x*y."""
    x, y = LinExpr.of(x), LinExpr.of(y)
    z = model.var(z_name, "binary")
    model.add(family, LinExpr.of(z) - x, "<=", 0.0)
    model.add(family, LinExpr.of(z) - y, "<=", 0.0)
    model.add(family, x + y - z, "<=", 1.0)
    model.definitions[z_name] = ("product", x, y)
    return z


# ---------------------------------------------------------------------------
# model construction


def _check_inputs(graph: TaskGraph, power: PowerModel, K: int):
    if K < 1:
        raise ModelError("need at least one processor")
    if power.m < 1:
        raise ModelError("need at least one frequency")
    problems = validate(graph)
    if problems:
        raise ModelError("; ".join(p.message for p in problems))


def _build_core(graph: TaskGraph, power: PowerModel, K: int) -> MilpModel:
    """Variables and rows shared by both objectives."""
    _check_inputs(graph, power, K)
    n, m = graph.n, power.m
    Td = graph.period * MS
    ids = list(range(1, n + 1))
    model = MilpModel(meta={"n": n, "m": m, "K": K, "period_ms": Td})
    for u in ids:
        model.var(f"start_{u}", lo=0.0, hi=Td)
    for u in ids:
        for i in range(1, m + 1):
            model.var(f"n_{u}_{i}", lo=0.0, hi=graph.workload(u) * MCYC)
    for k in range(1, K + 1):
        for u in ids:
            model.var(f"p_{k}_{u}", "binary")
    for k in range(1, K + 1):
        for u in range(0, n + 1):
            for v in range(1, n + 2):
                if u != v:
                    model.var(f"o_{k}_{u}_{v}", "binary")
    for u in ids:
        model.var(f"dur_{u}", lo=0.0, hi=Td)

    ghz = [f * 1e-9 for f in power.freqs]
    for u in ids:  # C1
        expr = LinExpr({f"dur_{u}": 1.0})
        for i in range(1, m + 1):
            expr.add(f"n_{u}_{i}", -1.0 / ghz[i - 1])
        model.add("C1", expr, "=", 0.0, f"C1_dur_{u}")
        model.definitions[f"dur_{u}"] = ("expr", LinExpr({f"n_{u}_{i}": 1.0 / ghz[i - 1] for i in range(1, m + 1)}))
    for u in ids:  # C2
        model.add("C2", LinExpr({f"n_{u}_{i}": 1.0 for i in range(1, m + 1)}), "=", graph.workload(u) * MCYC,
                  f"C2_work_{u}")
    for u in ids:  # C3
        model.add("C3", LinExpr({f"start_{u}": 1.0, f"dur_{u}": 1.0}), "<=", Td, f"C3_deadline_{u}")
    for u, v in graph.edges:  # C4
        model.add("C4", LinExpr({f"start_{u}": 1.0, f"dur_{u}": 1.0, f"start_{v}": -1.0}), "<=", 0.0,
                  f"C4_prec_{u}_{v}")
    for u in ids:  # C5
        model.add("C5", LinExpr({f"p_{k}_{u}": 1.0 for k in range(1, K + 1)}), "=", 1.0, f"C5_assign_{u}")

    def p_term(k, u):
        return LinExpr(const=1.0) if u in (0, n + 1) else LinExpr({f"p_{k}_{u}": 1.0})

    for k in range(1, K + 1):  # C6
        for u in range(0, n + 1):
            expr = LinExpr({f"o_{k}_{u}_{v}": 1.0 for v in range(1, n + 2) if v != u}) - p_term(k, u)
            model.add("C6", expr, "=", 0.0, f"C6_next_{k}_{u}")
        for v in range(1, n + 2):
            expr = LinExpr({f"o_{k}_{u}_{v}": 1.0 for u in range(0, n + 1) if u != v}) - p_term(k, v)
            model.add("C6", expr, "=", 0.0, f"C6_prev_{k}_{v}")
    for k in range(1, K + 1):  # C7
        for u in ids:
            for v in ids:
                if u != v:
                    expr = LinExpr({f"start_{u}": 1.0, f"dur_{u}": 1.0, f"o_{k}_{u}_{v}": Td, f"start_{v}": -1.0})
                    model.add("C7", expr, "<=", Td, f"C7_order_{k}_{u}_{v}")
    _fold_constants(model)
    exec_obj = LinExpr()
    for u in ids:  # C12 (objective only)
        for i in range(1, m + 1):
            exec_obj.add(f"n_{u}_{i}", power.cycle_energies[i - 1] * MJ / MCYC)
    model.objective = exec_obj
    return model


def _fold_constants(model: MilpModel) -> None:
    """Move constant terms of rows into the right-hand side."""
    for con in model.constraints:
        if con.expr.const:
            con.rhs -= con.expr.const
            con.expr = con.expr.copy()
            con.expr.const = 0.0


def build_isc_t_model(graph: TaskGraph, power: PowerModel, K: int) -> MilpModel:
    """Scheduling and frequency splitting with execution energy only."""
    model = _build_core(graph, power, K)
    model.meta["objective"] = "isc+t"
    return model


def build_isct_model(graph: TaskGraph, power: PowerModel, K: int) -> MilpModel:
    """Full model: execution energy plus idle energy with sleep decisions."""
    model = _build_core(graph, power, K)
    model.meta["objective"] = "isct"
    n = graph.n
    ids = list(range(1, n + 1))
    Td = graph.period * MS
    tbe = power.t_be * MS
    c = power.c  # W == mJ/ms
    esw = power.e_sw * MJ
    K = model.meta["K"]
    aux = itertools.count(1)

    def fin(u):
        return LinExpr({f"start_{u}": 1.0, f"dur_{u}": 1.0})

    # C8: idle time before each task that is not first on its processor
    for v in ids:
        gap = LinExpr({f"start_{v}": 1.0})
        for k in range(1, K + 1):
            for u in ids:
                if u != v:
                    q = linearize_bool_times_real(model, f"aux_{next(aux)}", f"o_{k}_{u}_{v}", fin(u), 0.0, Td, "C8")
                    gap.add(q.name, -1.0)
        not_first = LinExpr(const=1.0) - LinExpr({f"o_{k}_0_{v}": 1.0 for k in range(1, K + 1)})
        linearize_bool_times_real(model, f"i_{v}", not_first, gap, 0.0, Td, "C8")
    # C9: wrap-around idle per processor
    for k in range(1, K + 1):
        expr = LinExpr(const=Td)
        for u in ids:
            r = linearize_bool_times_real(model, f"aux_{next(aux)}", f"o_{k}_{u}_{n + 1}", fin(u), 0.0, Td, "C9")
            expr.add(r.name, -1.0)
        for v in ids:
            s = linearize_bool_times_real(model, f"aux_{next(aux)}", f"o_{k}_0_{v}", f"start_{v}", 0.0, Td, "C9")
            expr.add(s.name, 1.0)
        model.var(f"ip_{k}", lo=0.0, hi=Td)
        model.add("C9", LinExpr({f"ip_{k}": 1.0}) - expr, "=", 0.0, f"C9_wrap_{k}")
        model.definitions[f"ip_{k}"] = ("expr", expr)
    # C10: sleep indicators and processor use
    for v in ids:
        model.var(f"sw_{v}", "binary")
        model.add("C10", LinExpr({f"i_{v}": 1.0, f"sw_{v}": -Td}), "<=", tbe, f"C10_sw_hi_{v}")
        model.add("C10", LinExpr({f"sw_{v}": tbe, f"i_{v}": -1.0}), "<=", 0.0, f"C10_sw_lo_{v}")
    for k in range(1, K + 1):
        model.var(f"swp_{k}", "binary")
        model.add("C10", LinExpr({f"ip_{k}": 1.0, f"swp_{k}": -Td}), "<=", tbe, f"C10_swp_hi_{k}")
        model.add("C10", LinExpr({f"swp_{k}": tbe, f"ip_{k}": -1.0}), "<=", 0.0, f"C10_swp_lo_{k}")
    for k in range(1, K + 1):
        model.var(f"used_{k}", "binary")
        model.add("C10", LinExpr({f"used_{k}": Td, f"ip_{k}": 1.0}), ">=", Td, f"C10_used_lo_{k}")
        model.add("C10", LinExpr({f"used_{k}": 1.0}) - LinExpr({f"p_{k}_{u}": 1.0 for u in ids}), "<=", 0.0,
                  f"C10_used_hi_{k}")
    # C11: idle energy terms
    obj = model.objective
    for v in ids:
        w = linearize_bool_times_real(model, f"aux_{next(aux)}", f"sw_{v}", f"i_{v}", 0.0, Td, "C11")
        obj.add(f"sw_{v}", esw)
        obj.add(f"i_{v}", c)
        obj.add(w.name, -c)
    for k in range(1, K + 1):
        z = linearize_bool_times_bool(model, f"aux_{next(aux)}", f"used_{k}", f"swp_{k}", "C11")
        g = linearize_bool_times_real(model, f"aux_{next(aux)}", f"used_{k}", f"ip_{k}", 0.0, Td, "C11")
        h = linearize_bool_times_real(model, f"aux_{next(aux)}", z.name, f"ip_{k}", 0.0, Td, "C11")
        obj.add(z.name, esw)
        obj.add(g.name, c)
        obj.add(h.name, -c)
    _fold_constants(model)
    return model


def core_counts(model: MilpModel) -> dict[str, int]:
    """Sizes of the start, split, assignment and ordering families."""
    return {
        "start": len(model.names("start_")),
        "split": len(model.names("n_")),
        "assign": len(model.names("p_")),
        "order": len(model.names("o_")),
    }


# ---------------------------------------------------------------------------
# LP text export


def _num(x: float) -> str:
    if x == 0:
        return "0"
    return f"{x:.12g}"


def _terms(expr: LinExpr) -> str:
    parts = []
    for name, coef in expr.terms.items():
        if coef == 0:
            continue
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        body = name if mag == 1 else f"{_num(mag)} {name}"
        parts.append(f"{sign} {body}")
    if not parts:
        return "0"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def export_lp(model: MilpModel) -> str:
    """LP text: Minimize / Subject To / Bounds / Binary / End, declaration
    order throughout, 12 significant digits."""
    lines = ["Minimize"]
    obj = _terms(model.objective)
    if model.objective.const:
        obj = f"{obj} + {_num(model.objective.const)} constant" if obj != "0" else _num(model.objective.const)
    lines.append(f" obj: {obj}")
    lines.append("Subject To")
    for con in model.constraints:
        rel = {"<=": "<=", ">=": ">=", "=": "="}[con.sense]
        lines.append(f" {con.name}: {_terms(con.expr)} {rel} {_num(con.rhs)}")
    bounds = []
    for v in model.variables:
        if v.kind == "binary":
            continue
        if v.lo == 0 and math.isinf(v.hi):
            continue
        lo = "-inf" if math.isinf(v.lo) else _num(v.lo)
        hi = "+inf" if math.isinf(v.hi) else _num(v.hi)
        bounds.append(f" {lo} <= {v.name} <= {hi}")
    if bounds:
        lines.append("Bounds")
        lines += bounds
    binaries = [v.name for v in model.variables if v.kind == "binary"]
    if binaries:
        lines.append("Binary")
        lines += [f" {name}" for name in binaries]
    lines.append("End")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# solutions

_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def format_solution(sol: dict[str, float], model: MilpModel) -> str:
    lines = [f"# objective {_num(model.evaluate_objective(sol))}"]
    lines += [f"{v.name} {float(sol[v.name])!r}" for v in model.variables]
    return "\n".join(lines) + "\n"


def parse_solution(text: str, model: MilpModel) -> dict[str, float]:
    """``<name> <value>`` per line, '#' comments. Every model variable must
    appear exactly once; binaries within 1e-6 of 0 or 1 are snapped."""
    sol: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise SolutionParseError(lineno, f"expected '<name> <value>', got {raw.strip()!r}")
        name, val = parts
        if not _NAME.match(name) or name not in model:
            raise SolutionParseError(lineno, f"unknown variable {name!r}")
        if name in sol:
            raise SolutionParseError(lineno, f"variable {name!r} given twice")
        try:
            x = float(val)
        except ValueError:
            raise SolutionParseError(lineno, f"value {val!r} is not a number") from None
        if not math.isfinite(x):
            raise SolutionParseError(lineno, f"value {val!r} is not finite")
        if model[name].kind == "binary" and abs(x - round(x)) <= 1e-6:
            x = float(round(x))
        sol[name] = x
    missing = [v.name for v in model.variables if v.name not in sol]
    if missing:
        head = ", ".join(missing[:5]) + (" ..." if len(missing) > 5 else "")
        raise SolutionParseError(len(text.splitlines()) + 1, f"missing {len(missing)} variable(s): {head}")
    return sol


def _fill_derived(model: MilpModel, sol: dict[str, float]) -> None:
    """Evaluate every recorded definition in declaration order."""
    for v in model.variables:
        d = model.definitions.get(v.name)
        if d is None or v.name in sol:
            continue
        if d[0] == "expr":
            sol[v.name] = d[1].value(sol)
        else:
            sol[v.name] = d[1].value(sol) * d[2].value(sol)


def schedule_to_solution(graph: TaskGraph, power: PowerModel, schedule: Schedule, model: MilpModel) -> dict[str, float]:
    """Complete variable assignment describing ``schedule``. Sleep flags follow
    the break-even rule, matching the energy evaluator's default."""
    n, K = graph.n, model.meta["K"]
    sol: dict[str, float] = {}
    for u in range(1, n + 1):
        p = schedule.placement(u)
        sol[f"start_{u}"] = p.start * MS
        for i, cyc in enumerate(p.cycles, start=1):
            sol[f"n_{u}_{i}"] = cyc * MCYC
        for k in range(1, K + 1):
            sol[f"p_{k}_{u}"] = 1.0 if p.proc == k else 0.0
    for k in range(1, K + 1):
        for u in range(0, n + 1):
            for v in range(1, n + 2):
                if u != v:
                    sol[f"o_{k}_{u}_{v}"] = 0.0
        seq = schedule.order(k)
        chain = [0] + seq + [n + 1]
        for u, v in zip(chain, chain[1:]):
            sol[f"o_{k}_{u}_{v}"] = 1.0
    if model.meta.get("objective") == "isct":
        lengths = {}
        for iv in idle_intervals(schedule, include_zero=True):
            lengths[(iv.proc, iv.index)] = iv.length
        for v in range(1, n + 1):
            p = schedule.placement(v)
            pos = schedule.order(p.proc).index(v)
            length = lengths.get((p.proc, pos), 0.0) if pos > 0 else 0.0
            sol[f"sw_{v}"] = 1.0 if (length >= TIME_TOL and switchable(power, length)) else 0.0
        for k in range(1, K + 1):
            seq = schedule.order(k)
            sol[f"used_{k}"] = 1.0 if seq else 0.0
            length = lengths.get((k, 0), graph.period) if seq else graph.period
            sol[f"swp_{k}"] = 1.0 if switchable(power, length) else 0.0
    _fill_derived(model, sol)
    return sol


@dataclass
class Verification:
    schedule: Schedule | None
    energy: float | None  # J, from schedule semantics
    objective: float  # J, from the model objective
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def solution_to_schedule(graph: TaskGraph, power: PowerModel, K: int, sol: dict[str, float]) -> tuple[Schedule, list[str]]:
    problems = []
    placements = []
    for u in range(1, graph.n + 1):
        procs = [k for k in range(1, K + 1) if sol[f"p_{k}_{u}"] > 0.5]
        if len(procs) != 1:
            problems.append(f"task {u}: assigned to {len(procs)} processors")
        proc = procs[0] if procs else 1
        cycles = tuple(sol[f"n_{u}_{i}"] / MCYC for i in range(1, power.m + 1))
        placements.append(Placement(u, proc, sol[f"start_{u}"] / MS, cycles))
    return Schedule(graph.period, K, power.freqs, tuple(placements)), problems


def verify_solution(graph: TaskGraph, power: PowerModel, K: int, sol: dict[str, float],
                    model: MilpModel | None = None) -> Verification:
    """Rebuild the schedule from start, split and assignment values, check it
    against the graph, and price it from schedule semantics. The model's own
    objective is reported alongside for comparison."""
    model = model or build_isct_model(graph, power, K)
    objective = model.evaluate_objective(sol) / MJ
    schedule, problems = solution_to_schedule(graph, power, K, sol)
    problems += schedule_violations(graph, power, schedule)
    if problems:
        return Verification(schedule, None, objective, problems)
    energy = schedule_energy(graph, power, schedule).total
    return Verification(schedule, energy, objective, [])
