"""Dense bounded-variable primal simplex.

Small LPs only (a few hundred columns). Every variable needs a finite lower
bound; upper bounds may be infinite. Pricing is Dantzig's rule with ties to the
lowest index; after a run of degenerate pivots it falls back to Bland's rule
until the objective moves again, which rules out cycling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9


class LpError(ValueError):
    pass


@dataclass(frozen=True)
class LinearProgram:
    """minimize c @ x  s.t.  A[i] @ x (<=|>=|=) b[i],  lo <= x <= hi."""

    c: np.ndarray
    A: np.ndarray
    senses: tuple[str, ...]
    b: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def build(cls, c, A, senses, b, lo=None, hi=None) -> "LinearProgram":
        c = np.asarray(c, dtype=float)
        n = c.shape[0]
        A = np.asarray(A, dtype=float)
        if A.size == 0:
            A = np.zeros((0, n))
        elif A.ndim == 1:
            A = A.reshape(1, -1)
        b = np.asarray(b, dtype=float).reshape(-1)
        lo = np.zeros(n) if lo is None else np.asarray(lo, dtype=float)
        hi = np.full(n, np.inf) if hi is None else np.asarray(hi, dtype=float)
        return cls(c, A, tuple(senses), b, lo, hi)

    def check(self) -> None:
        n = self.c.shape[0]
        m = len(self.senses)
        if self.A.shape != (m, n) or self.b.shape != (m,):
            raise LpError(f"dimension mismatch: A {self.A.shape}, b {self.b.shape}, {m} senses, {n} columns")
        if self.lo.shape != (n,) or self.hi.shape != (n,):
            raise LpError("bound vectors must have one entry per column")
        if not np.all(np.isfinite(self.lo)):
            raise LpError("every variable needs a finite lower bound")
        if np.any(self.lo > self.hi):
            raise LpError("lower bound exceeds upper bound")
        bad = set(self.senses) - {"<=", ">=", "="}
        if bad:
            raise LpError(f"unknown relation(s) {sorted(bad)}")


@dataclass(frozen=True)
class LpOutcome:
    status: str  # optimal | infeasible | unbounded
    x: np.ndarray | None
    objective: float | None
    iterations: int = 0


def solve_lp(lp: LinearProgram, max_iter: int | None = None) -> LpOutcome:
    lp.check()
    return _Simplex(lp, max_iter).run()


class _Simplex:
    def __init__(self, lp: LinearProgram, max_iter: int | None):
        m, n = lp.A.shape
        self.n = n
        self.m = m
        slack_rows = [i for i, s in enumerate(lp.senses) if s != "="]
        ns = len(slack_rows)
        width = n + ns
        A = np.zeros((m, width))
        A[:, :n] = lp.A
        for j, i in enumerate(slack_rows):
            A[i, n + j] = 1.0 if lp.senses[i] == "<=" else -1.0
        lo = np.concatenate([lp.lo, np.zeros(ns)])
        hi = np.concatenate([lp.hi, np.full(ns, np.inf)])
        x = lo.copy()
        resid = lp.b - A @ x

        # start from slacks where they can carry the residual, artificials elsewhere
        basis = [-1] * m
        for j, i in enumerate(slack_rows):
            coef = A[i, n + j]
            if resid[i] * coef >= 0:
                basis[i] = n + j
        art_rows = [i for i in range(m) if basis[i] < 0]
        na = len(art_rows)
        total = width + na
        T = np.zeros((m, total + 1))
        T[:, :width] = A
        T[:, -1] = lp.b
        lo = np.concatenate([lo, np.zeros(na)])
        hi = np.concatenate([hi, np.full(na, np.inf)])
        x = np.concatenate([x, np.zeros(na)])
        for j, i in enumerate(art_rows):
            T[i, width + j] = 1.0 if resid[i] >= 0 else -1.0
            basis[i] = width + j
        # normalise so the basis matrix is the identity
        for i, col in enumerate(basis):
            T[i] /= T[i, col]
        self.T = T
        self.basis = np.array(basis, dtype=int)
        self.lo, self.hi, self.x = lo, hi, x
        self.width = width
        self.total = total
        self.c = np.concatenate([lp.c, np.zeros(ns + na)])
        self.art = np.arange(width, total)
        self.iterations = 0
        self.max_iter = max_iter or 50 * (m + total + 10)
        self._refresh()

    def _refresh(self):
        nonbasic = np.ones(self.total, dtype=bool)
        nonbasic[self.basis] = False
        xb = self.T[:, -1] - self.T[:, :-1][:, nonbasic] @ self.x[nonbasic]
        self.x[self.basis] = xb

    def run(self) -> LpOutcome:
        if len(self.art):
            cost = np.zeros(self.total)
            cost[self.art] = 1.0
            status = self._optimize(cost)
            infeas = float(self.x[self.art].sum())
            scale = 1.0 + float(np.abs(self.T[:, -1]).max(initial=0.0))
            if status != "optimal" or infeas > FEAS_TOL * scale:
                return LpOutcome("infeasible", None, None, self.iterations)
            self.hi[self.art] = 0.0
            self.x[self.art] = np.minimum(self.x[self.art], 0.0)
            self._refresh()
        status = self._optimize(self.c)
        if status != "optimal":
            return LpOutcome(status, None, None, self.iterations)
        x = self.x[: self.n].copy()
        x = np.minimum(np.maximum(x, self.lo[: self.n]), self.hi[: self.n])
        return LpOutcome("optimal", x, float(self.c[: self.n] @ x), self.iterations)

    def _optimize(self, cost: np.ndarray) -> str:
        T = self.T
        bland = False
        stall = 0
        movable = self.hi > self.lo
        finite_hi = np.isfinite(self.hi)
        while True:
            if self.iterations >= self.max_iter:
                raise LpError("simplex iteration limit reached")
            d = cost - cost[self.basis] @ T[:, :-1]
            d[self.basis] = 0.0
            at_lo = self.x <= self.lo + FEAS_TOL * (1 + np.abs(self.lo))
            hi_f = np.where(finite_hi, self.hi, 0.0)
            at_hi = finite_hi & (self.x >= hi_f - FEAS_TOL * (1 + np.abs(hi_f)))
            up = movable & at_lo & (d < -OPT_TOL)
            down = movable & at_hi & ~at_lo & (d > OPT_TOL)
            elig = up | down
            elig[self.basis] = False
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                return "optimal"
            if bland:
                q = int(cand[0])
            else:
                q = int(cand[np.argmax(np.abs(d[cand]))])  # argmax keeps the lowest index on ties
            direction = 1.0 if up[q] else -1.0
            alpha = T[:, q] * direction
            xb = self.x[self.basis]
            lob = self.lo[self.basis]
            hib = self.hi[self.basis]
            theta = self.hi[q] - self.lo[q]
            leave = -1
            leave_to_hi = False
            with np.errstate(divide="ignore", invalid="ignore"):
                dec = alpha > PIVOT_TOL
                inc = alpha < -PIVOT_TOL
                ratio = np.full(self.m, np.inf)
                ratio[dec] = (xb[dec] - lob[dec]) / alpha[dec]
                ratio[inc] = (hib[inc] - xb[inc]) / -alpha[inc]
            ratio = np.maximum(ratio, 0.0)
            if self.m:
                best = ratio.min()
                if best < theta:
                    ties = np.flatnonzero(ratio <= best + 1e-12 * (1 + abs(best)))
                    r = int(ties[np.argmin(self.basis[ties])])
                    theta = float(ratio[r])
                    leave = r
                    leave_to_hi = bool(inc[r])
            if not np.isfinite(theta):
                return "unbounded"
            self.iterations += 1
            self.x[q] += direction * theta
            if leave < 0:
                self.x[q] = self.hi[q] if direction > 0 else self.lo[q]
                self._refresh()
            else:
                out = self.basis[leave]
                self._pivot(leave, q)
                self.x[out] = self.hi[out] if leave_to_hi else self.lo[out]
                self._refresh()
            if theta <= 1e-12:
                stall += 1
                if stall > 2 * (self.m + 1):
                    bland = True
            else:
                stall = 0
                bland = False

    def _pivot(self, r: int, q: int):
        T = self.T
        T[r] /= T[r, q]
        col = T[:, q].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        self.basis[r] = q


def solve_dense(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, lo=None, hi=None) -> LpOutcome:
    """Convenience wrapper taking separate inequality/equality blocks."""
    c = np.asarray(c, dtype=float)
    rows, senses, rhs = [], [], []
    if A_ub is not None and len(A_ub):
        rows.append(np.asarray(A_ub, dtype=float))
        senses += ["<="] * len(A_ub)
        rhs.append(np.asarray(b_ub, dtype=float))
    if A_eq is not None and len(A_eq):
        rows.append(np.asarray(A_eq, dtype=float))
        senses += ["="] * len(A_eq)
        rhs.append(np.asarray(b_eq, dtype=float))
    A = np.vstack(rows) if rows else np.zeros((0, c.shape[0]))
    b = np.concatenate(rhs) if rhs else np.zeros(0)
    return solve_lp(LinearProgram.build(c, A, senses, b, lo, hi))
