import itertools

import numpy as np
import pytest
from scipy.optimize import linprog

from isct.lp import LinearProgram, LpError, solve_dense, solve_lp


def _random_lp(rng, m, n, with_eq=False):
    A = rng.uniform(-1, 1, (m, n)).round(3)
    x0 = rng.uniform(0, 1, n)
    b = A @ x0 + rng.uniform(0, 0.5, m)  # x0 strictly feasible
    c = rng.uniform(-1, 1, n).round(3)
    hi = np.full(n, 2.0)
    senses = ["<="] * m
    if with_eq:
        k = m // 4
        b[:k] = A[:k] @ x0
        senses[:k] = ["="] * k
    return LinearProgram.build(c, A, senses, b, np.zeros(n), hi)


def _highs(lp):
    ub = [i for i, s in enumerate(lp.senses) if s == "<="]
    eq = [i for i, s in enumerate(lp.senses) if s == "="]
    res = linprog(lp.c, A_ub=lp.A[ub] if ub else None, b_ub=lp.b[ub] if ub else None,
                  A_eq=lp.A[eq] if eq else None, b_eq=lp.b[eq] if eq else None,
                  bounds=list(zip(lp.lo, lp.hi)), method="highs")
    return res


def _vertex_oracle(lp):
    """Best objective over all basic feasible points of a small LP."""
    m, n = lp.A.shape
    rows = [(lp.A[i], lp.b[i]) for i in range(m)]
    rows += [(np.eye(n)[j], lp.lo[j]) for j in range(n)]
    rows += [(np.eye(n)[j], lp.hi[j]) for j in range(n)]
    G = np.array([r for r, _ in rows])
    h = np.array([v for _, v in rows])
    best = np.inf
    for idx in itertools.combinations(range(len(rows)), n):
        M = G[list(idx)]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, h[list(idx)])
        if np.all(lp.A @ x <= lp.b + 1e-9) and np.all(x >= lp.lo - 1e-9) and np.all(x <= lp.hi + 1e-9):
            best = min(best, float(lp.c @ x))
    return best


@pytest.mark.parametrize("seed", range(3))
def test_small_lps_match_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    lp = _random_lp(rng, 5, 7)
    out = solve_lp(lp)
    assert out.status == "optimal"
    assert out.objective == pytest.approx(_vertex_oracle(lp), abs=1e-8)


@pytest.mark.parametrize("seed", range(25))
def test_random_lps_match_highs(seed):
    rng = np.random.default_rng(100 + seed)
    lp = _random_lp(rng, 20, 30, with_eq=seed % 2 == 1)
    ours = solve_lp(lp)
    ref = _highs(lp)
    assert ref.status == 0
    assert ours.status == "optimal"
    assert ours.objective == pytest.approx(ref.fun, rel=1e-8, abs=1e-10)
    assert np.all(ours.x >= lp.lo - 1e-9) and np.all(ours.x <= lp.hi + 1e-9)
    for i, s in enumerate(lp.senses):
        lhs = lp.A[i] @ ours.x
        assert lhs <= lp.b[i] + 1e-8 if s == "<=" else abs(lhs - lp.b[i]) <= 1e-8
    # basic point: few variables strictly inside their bounds
    inside = (ours.x > lp.lo + 1e-9) & (ours.x < lp.hi - 1e-9)
    assert inside.sum() <= lp.A.shape[0]


def test_single_bounded_variable():
    out = solve_dense([-1.0], A_ub=[[1.0]], b_ub=[1.0], hi=[10.0])
    assert out.status == "optimal"
    assert out.x[0] == pytest.approx(1.0) and out.objective == pytest.approx(-1.0)


def test_contradictory_rows():
    lp = LinearProgram.build([1.0], [[1.0], [1.0]], [">=", "<="], [2.0, 1.0])
    assert solve_lp(lp).status == "infeasible"


def test_same_answer_every_time():
    rng = np.random.default_rng(5)
    lp = _random_lp(rng, 12, 18, with_eq=True)
    a, b = solve_lp(lp), solve_lp(lp)
    assert np.array_equal(a.x, b.x) and a.iterations == b.iterations


def test_infeasible():
    out = solve_dense([1, 1], A_ub=[[1, 1]], b_ub=[-1])
    assert out.status == "infeasible"


def test_unbounded():
    out = solve_dense([-1, 0], A_ub=[[0, 1]], b_ub=[1])
    assert out.status == "unbounded"


def test_ge_rows_and_equalities():
    # min x + 2y  s.t. x + y >= 2, x - y = 0
    lp = LinearProgram.build([1, 2], [[1, 1], [1, -1]], [">=", "="], [2, 0])
    out = solve_lp(lp)
    assert out.objective == pytest.approx(3.0)
    assert out.x == pytest.approx([1.0, 1.0])


def test_bound_flip_only():
    # optimum sits at the upper bound with no row involved
    out = solve_dense([-1.0], lo=[0.0], hi=[4.0])
    assert out.status == "optimal" and out.x[0] == pytest.approx(4.0)


def test_degenerate_problem_terminates():
    # many redundant constraints through the optimum vertex
    A = [[1, 1], [1, 1], [2, 2], [1, 0], [0, 1]]
    out = solve_dense([-1, -1], A_ub=A, b_ub=[1, 1, 2, 1, 1])
    assert out.objective == pytest.approx(-1.0)


@pytest.mark.parametrize("kwargs", [
    dict(c=[1, 1], A=[[1]], senses=["<="], b=[1]),
    dict(c=[1], A=[[1]], senses=["<"], b=[1]),
    dict(c=[1], A=[[1]], senses=["<="], b=[1], lo=[-np.inf]),
    dict(c=[1], A=[[1]], senses=["<="], b=[1], lo=[2], hi=[1]),
])
def test_malformed_programs(kwargs):
    with pytest.raises(LpError):
        solve_lp(LinearProgram.build(**kwargs))
