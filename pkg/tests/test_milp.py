import itertools

import numpy as np
import pytest

from reservoir_flex.program import MathProgram, ProgramError
from reservoir_flex.solver import SolverConfig, check_solution, solve_lp, solve_milp


def _knapsack(values, weights, cap):
    p = MathProgram()
    for i in range(len(values)):
        p.add_variable(f"b{i}", 0, 1, kind="binary")
    p.add_constraint({f"b{i}": w for i, w in enumerate(weights)}, "<=", cap)
    # maximize value -> minimize negative
    p.set_objective({f"b{i}": -v for i, v in enumerate(values)})
    return p


def test_knapsack_three_items():
    # values (3, 4, 5), weights (2, 3, 4), capacity 5 -> best value 7
    p = _knapsack([3, 4, 5], [2, 3, 4], 5)
    sol = solve_milp(p)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(-7.0)
    assert sol.assignment["b0"] == pytest.approx(1.0)
    assert sol.assignment["b1"] == pytest.approx(1.0)
    assert sol.assignment["b2"] == pytest.approx(0.0)


def test_integral_root_single_node():
    p = MathProgram()
    p.add_variable("b0", 0, 1, kind="binary")
    p.add_variable("b1", 0, 1, kind="binary")
    p.set_objective({"b0": 1.0, "b1": 2.0})  # LP optimum already integral (0,0)
    sol = solve_milp(p)
    assert sol.status == "optimal"
    assert sol.node_count == 1
    assert sol.objective == pytest.approx(0.0)


def test_rejects_bilinear():
    p = MathProgram()
    for name in "wxy":
        p.add_variable(name, 0, 1)
    p.add_bilinear("w", "x", "y", 1.0)
    p.set_objective({"w": 1.0})
    with pytest.raises(ProgramError):
        solve_milp(p)


def test_infeasible_milp():
    p = MathProgram()
    p.add_variable("b0", 0, 1, kind="binary")
    p.add_variable("b1", 0, 1, kind="binary")
    p.add_constraint({"b0": 1.0, "b1": 1.0}, ">=", 3.0)
    p.set_objective({"b0": 1.0})
    assert solve_milp(p).status == "infeasible"


def test_node_limit_reports_status():
    rng = np.random.default_rng(3)
    n = 10
    p = MathProgram()
    for i in range(n):
        p.add_variable(f"b{i}", 0, 1, kind="binary")
    w = rng.uniform(1, 3, n)
    p.add_constraint({f"b{i}": float(w[i]) for i in range(n)}, "<=", float(w.sum() / 2))
    p.set_objective({f"b{i}": float(-rng.uniform(1, 2)) for i in range(n)})
    sol = solve_milp(p, SolverConfig(node_limit=2))
    assert sol.status == "node_limit"
    assert sol.best_bound <= sol.objective + 1e-12


def _enumerate_oracle(p: MathProgram):
    """Brute force over all binary fixings, LP for the continuous rest."""
    binaries = [v.name for v in p.variables if v.kind == "binary"]
    best = np.inf
    for bits in itertools.product((0.0, 1.0), repeat=len(binaries)):
        q = MathProgram()
        for v in p.variables:
            if v.kind == "binary":
                val = bits[binaries.index(v.name)]
                q.add_variable(v.name, val, val)
            else:
                q.add_variable(v.name, v.lower, v.upper)
        for con in p.constraints:
            q.add_constraint(dict(con.coeffs), con.sense, con.rhs, con.name)
        q.set_objective(dict(p.objective), p.objective_constant)
        sol = solve_lp(q)
        if sol.status == "optimal":
            best = min(best, sol.objective)
    return best


@pytest.mark.parametrize("seed", range(10))
def test_random_mixed_milp_vs_enumeration(seed):
    rng = np.random.default_rng(50 + seed)
    nb = int(rng.integers(1, 4))
    nc = int(rng.integers(1, 4))
    p = MathProgram()
    for i in range(nb):
        p.add_variable(f"b{i}", 0, 1, kind="binary")
    for i in range(nc):
        p.add_variable(f"x{i}", 0.0, float(rng.uniform(1, 4)))
    names = [f"b{i}" for i in range(nb)] + [f"x{i}" for i in range(nc)]
    for _ in range(int(rng.integers(1, 4))):
        coeffs = {n: float(rng.uniform(-2, 2)) for n in names}
        p.add_constraint(coeffs, "<=", float(rng.uniform(0.5, 4)))
    p.set_objective({n: float(rng.uniform(-3, 3)) for n in names})
    sol = solve_milp(p)
    oracle = _enumerate_oracle(p)
    if not np.isfinite(oracle):
        assert sol.status == "infeasible"
    else:
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(oracle, rel=1e-6, abs=1e-8)
        assert check_solution(p, sol.assignment, 1e-6).ok


def test_determinism_nodes_and_objective():
    p = _knapsack([3, 4, 5, 7, 2], [2, 3, 4, 5, 1], 8)
    s1 = solve_milp(p)
    s2 = solve_milp(p)
    assert s1.objective == s2.objective
    assert s1.node_count == s2.node_count


def test_pseudo_cost_branching_agrees():
    p = _knapsack([3, 4, 5, 7, 2], [2, 3, 4, 5, 1], 8)
    a = solve_milp(p, SolverConfig(branching="most_fractional"))
    b = solve_milp(p, SolverConfig(branching="pseudo_cost"))
    assert a.objective == pytest.approx(b.objective)
