import itertools

import numpy as np
import pytest

from reservoir_flex.program import MathProgram, ProgramError
from reservoir_flex.solver import SolverConfig, check_solution, solve_lp


def _prog(n_vars, bounds, rows, obj):
    p = MathProgram()
    for i, (lo, hi) in enumerate(bounds):
        p.add_variable(f"x{i}", lo, hi)
    for coeffs, sense, rhs in rows:
        p.add_constraint({f"x{i}": c for i, c in coeffs.items()}, sense, rhs)
    p.set_objective({f"x{i}": c for i, c in obj.items()})
    return p


def test_trivial_box_lp():
    # min -x s.t. x <= 1, x >= 0
    p = _prog(1, [(0, np.inf)], [({0: 1.0}, "<=", 1.0)], {0: -1.0})
    sol = solve_lp(p)
    assert sol.status == "optimal"
    assert sol.assignment["x0"] == pytest.approx(1.0)
    assert sol.objective == pytest.approx(-1.0)


def test_duplicated_rows_terminate():
    rows = [({0: 1.0, 1: 1.0}, "<=", 4.0)] * 5 + [({0: 1.0}, "<=", 3.0)] * 3
    p = _prog(2, [(0, np.inf)] * 2, rows, {0: -2.0, 1: -1.0})
    sol = solve_lp(p)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(-7.0)  # x=(3,1)


def test_equality_and_negative_bounds():
    # min x + y s.t. x + y = 1, x in [-2, 2], y in [-2, 2] -> obj 1
    p = _prog(2, [(-2, 2)] * 2, [({0: 1.0, 1: 1.0}, "=", 1.0)], {0: 1.0, 1: 1.0})
    sol = solve_lp(p)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(1.0)


def test_infeasible():
    p = _prog(1, [(0, 1)], [({0: 1.0}, ">=", 2.0)], {0: 1.0})
    assert solve_lp(p).status == "infeasible"


def test_unbounded():
    p = _prog(1, [(0, np.inf)], [], {0: -1.0})
    assert solve_lp(p).status == "unbounded"


def test_free_variable():
    # min x s.t. x >= -5 through a row, variable itself unbounded
    p = _prog(1, [(-np.inf, np.inf)], [({0: 1.0}, ">=", -5.0)], {0: 1.0})
    sol = solve_lp(p)
    assert sol.objective == pytest.approx(-5.0)


def test_fixed_variables_substituted():
    p = MathProgram()
    p.add_variable("a", 2.0, 2.0)
    p.add_variable("b", 0.0, 10.0)
    p.add_constraint({"a": 1.0, "b": 1.0}, "<=", 5.0)
    p.set_objective({"b": -1.0})
    sol = solve_lp(p)
    assert sol.assignment["a"] == 2.0
    assert sol.assignment["b"] == pytest.approx(3.0)


def test_inconsistent_fixed_row_infeasible():
    p = MathProgram()
    p.add_variable("a", 2.0, 2.0)
    p.add_constraint({"a": 1.0}, "=", 3.0)
    p.set_objective({})
    assert solve_lp(p).status == "infeasible"


def test_badly_scaled_lp():
    # Coefficients spanning ten orders of magnitude.
    p = MathProgram()
    p.add_variable("e", 0.0, 1e10)
    p.add_variable("c", 0.0, 4e9)
    p.add_constraint({"e": 1.0, "c": -0.9}, "=", 0.0)
    p.add_constraint({"e": 1.0}, ">=", 1.8e9)
    p.set_objective({"c": 5e-8})
    sol = solve_lp(p)
    assert sol.status == "optimal"
    assert sol.assignment["e"] == pytest.approx(1.8e9, rel=1e-9)
    assert sol.objective == pytest.approx(5e-8 * 2e9, rel=1e-9)


def _vertex_oracle(p: MathProgram):
    """Enumerate intersections of n active constraints (rows + bounds)."""
    n = len(p.variables)
    planes = []  # (normal, rhs) treated as equalities when active
    for con in p.constraints:
        row = np.zeros(n)
        for v, cf in con.coeffs.items():
            row[int(v[1:])] = cf
        planes.append((row, con.rhs))
    for j, v in enumerate(p.variables):
        e = np.zeros(n)
        e[j] = 1.0
        if np.isfinite(v.lower):
            planes.append((e.copy(), v.lower))
        if np.isfinite(v.upper):
            planes.append((e.copy(), v.upper))
    c = np.zeros(n)
    for v, cf in p.objective.items():
        c[int(v[1:])] = cf
    best = np.inf
    for combo in itertools.combinations(range(len(planes)), n):
        A = np.array([planes[i][0] for i in combo])
        b = np.array([planes[i][1] for i in combo])
        if abs(np.linalg.det(A)) < 1e-9:
            continue
        x = np.linalg.solve(A, b)
        assignment = {f"x{i}": float(x[i]) for i in range(n)}
        if check_solution(p, assignment, 1e-7).ok:
            best = min(best, float(c @ x))
    return best


@pytest.mark.parametrize("seed", range(12))
def test_random_lp_against_vertex_enumeration(seed):
    rng = np.random.default_rng(1000 + seed)
    n = int(rng.integers(2, 5))
    m = int(rng.integers(1, 5))
    bounds = [(0.0, float(rng.uniform(1, 10))) for _ in range(n)]
    rows = []
    for _ in range(m):
        coeffs = {i: float(rng.uniform(-2, 2)) for i in range(n)}
        rhs = float(rng.uniform(0.5, 8))
        rows.append((coeffs, "<=", rhs))
    obj = {i: float(rng.uniform(-3, 3)) for i in range(n)}
    p = _prog(n, bounds, rows, obj)
    sol = solve_lp(p)
    assert sol.status == "optimal"  # box is compact, origin feasible? rhs>0 yes
    oracle = _vertex_oracle(p)
    assert sol.objective == pytest.approx(oracle, rel=1e-6, abs=1e-7)
    assert check_solution(p, sol.assignment, 1e-6).ok


def test_degenerate_lp_matches_oracle():
    # Multiple redundant constraints through one vertex.
    rows = [
        ({0: 1.0, 1: 1.0}, "<=", 2.0),
        ({0: 2.0, 1: 2.0}, "<=", 4.0),
        ({0: 1.0}, "<=", 1.0),
        ({1: 1.0}, "<=", 1.0),
        ({0: 1.0, 1: 2.0}, "<=", 3.0),
    ]
    p = _prog(2, [(0, 10)] * 2, rows, {0: -1.0, 1: -1.0})
    sol = solve_lp(p)
    assert sol.objective == pytest.approx(-2.0)


def test_solve_lp_rejects_binaries_and_bilinear():
    p = MathProgram()
    p.add_variable("b", 0, 1, kind="binary")
    p.set_objective({"b": 1.0})
    with pytest.raises(ProgramError):
        solve_lp(p)
    q = MathProgram()
    for name in "wxy":
        q.add_variable(name, 0, 1)
    q.add_bilinear("w", "x", "y", 1.0)
    q.set_objective({"w": 1.0})
    with pytest.raises(ProgramError):
        solve_lp(q)


def test_determinism():
    rng = np.random.default_rng(7)
    n, m = 6, 8
    bounds = [(0.0, 5.0)] * n
    rows = [({i: float(rng.uniform(-1, 1)) for i in range(n)}, "<=",
             float(rng.uniform(1, 5))) for _ in range(m)]
    obj = {i: float(rng.uniform(-2, 2)) for i in range(n)}
    p = _prog(n, bounds, rows, obj)
    s1 = solve_lp(p)
    s2 = solve_lp(p)
    assert s1.objective == s2.objective
    assert s1.assignment == s2.assignment
