"""Solve a MilpModel with scipy's HiGHS binding; test-only reference."""

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import lil_matrix


def solve_model(model, time_limit=60.0):
    names = [v.name for v in model.variables]
    col = {n: j for j, n in enumerate(names)}
    c = np.zeros(len(names))
    for n, k in model.objective.terms.items():
        c[col[n]] = k
    A = lil_matrix((len(model.constraints), len(names)))
    lo = np.full(len(model.constraints), -np.inf)
    hi = np.full(len(model.constraints), np.inf)
    for i, con in enumerate(model.constraints):
        for n, k in con.expr.terms.items():
            A[i, col[n]] = k
        if con.sense in ("<=", "="):
            hi[i] = con.rhs
        if con.sense in (">=", "="):
            lo[i] = con.rhs
    integrality = np.array([1 if v.kind == "binary" else 0 for v in model.variables])
    bounds = Bounds([v.lo for v in model.variables], [v.hi for v in model.variables])
    cons = [LinearConstraint(A.tocsr(), lo, hi)] if model.constraints else []
    res = milp(c, constraints=cons, integrality=integrality, bounds=bounds,
               options={"time_limit": time_limit, "mip_rel_gap": 1e-9})
    if res.x is None:
        return None, None
    sol = dict(zip(names, res.x))
    for v in model.variables:
        if v.kind == "binary":
            sol[v.name] = float(round(sol[v.name]))
    return sol, res.fun + model.objective.const
