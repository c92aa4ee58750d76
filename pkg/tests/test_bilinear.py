import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reservoir_flex.program import BilinearTerm, MathProgram
from reservoir_flex.solver import SolverConfig, check_solution, solve_bilinear, solve_lp
from reservoir_flex.solver.bilinear import mccormick_rows, propagate_linear_bounds


def _xy_program(maximize=False):
    p = MathProgram()
    p.add_variable("w", -1.0, 1.0)
    p.add_variable("x", 0.0, 1.0)
    p.add_variable("y", 0.0, 1.0)
    p.add_bilinear("w", "x", "y", 1.0)
    p.add_constraint({"x": 1.0, "y": 1.0}, "=", 1.0)
    p.set_objective({"w": -1.0 if maximize else 1.0})
    return p


def test_min_xy_on_simplex_edge():
    # min x*y with x+y=1 on [0,1]^2 -> 0 at a corner
    sol = solve_bilinear(_xy_program())
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(0.0, abs=1e-6)


def test_max_xy_on_simplex_edge():
    # max x*y with x+y=1 -> 1/4 at x=y=1/2
    sol = solve_bilinear(_xy_program(maximize=True))
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(-0.25, abs=1e-6)
    assert sol.assignment["x"] == pytest.approx(0.5, abs=1e-3)


def test_root_bound_below_final_objective():
    p = _xy_program(maximize=True)
    sol = solve_bilinear(p)
    assert sol.best_bound <= sol.objective + 1e-9


def test_negative_coefficient_envelope():
    # min w where w = -2*x*y, x,y in [0,1], x=y -> w=-2x^2, min at x=1 -> -2
    p = MathProgram()
    p.add_variable("w", -2.0, 0.0)
    p.add_variable("x", 0.0, 1.0)
    p.add_variable("y", 0.0, 1.0)
    p.add_bilinear("w", "x", "y", -2.0)
    p.add_constraint({"x": 1.0, "y": -1.0}, "=", 0.0)
    p.set_objective({"w": 1.0})
    sol = solve_bilinear(p)
    assert sol.objective == pytest.approx(-2.0, abs=1e-6)


def test_mixed_binary_and_bilinear():
    # b=1 allows using the product channel; optimum picks b=1, w=-1.
    p = MathProgram()
    p.add_variable("w", -1.0, 1.0)
    p.add_variable("x", -1.0, 1.0)
    p.add_variable("y", 0.0, 1.0)
    p.add_variable("b", 0, 1, kind="binary")
    p.add_bilinear("w", "x", "y", 1.0)
    p.add_constraint({"y": 1.0, "b": -1.0}, "<=", 0.0)  # y <= b
    p.set_objective({"w": 1.0, "b": 0.25})
    sol = solve_bilinear(p)
    assert sol.status == "optimal"
    # with b=1: w = x*y minimized at x=-1,y=1 -> -1 + 0.25 = -0.75
    assert sol.objective == pytest.approx(-0.75, abs=1e-5)
    assert check_solution(p, sol.assignment, 1e-5).ok


def _grid_oracle(p: MathProgram, grid_var: str, n_grid: int = 801):
    """Fix `grid_var` on a grid and solve the remaining LP exactly."""
    v = p.variable(grid_var)
    best = math.inf
    for val in np.linspace(v.lower, v.upper, n_grid):
        q = MathProgram()
        for var in p.variables:
            if var.name == grid_var:
                q.add_variable(var.name, float(val), float(val))
            else:
                q.add_variable(var.name, var.lower, var.upper)
        for con in p.constraints:
            q.add_constraint(dict(con.coeffs), con.sense, con.rhs)
        for t in p.bilinear_terms:
            assert grid_var in (t.x, t.y)
            other = t.y if t.x == grid_var else t.x
            q.add_constraint({t.w: 1.0, other: -t.c * float(val)}, "=", 0.0)
        q.set_objective(dict(p.objective))
        sol = solve_lp(q)
        if sol.status == "optimal":
            best = min(best, sol.objective)
    return best


@pytest.mark.parametrize("seed", range(4))
def test_random_bilinear_vs_grid_oracle(seed):
    rng = np.random.default_rng(200 + seed)
    p = MathProgram()
    p.add_variable("x", 0.0, float(rng.uniform(1, 2)))
    nt = int(rng.integers(1, 3))
    for i in range(nt):
        p.add_variable(f"y{i}", 0.0, float(rng.uniform(1, 2)))
        p.add_variable(f"w{i}", -4.0, 4.0)
    for i in range(nt):
        p.add_bilinear(f"w{i}", "x", f"y{i}", float(rng.choice([-1.0, 1.0])))
        p.add_constraint({f"y{i}": 1.0, "x": float(rng.uniform(-1, 1))}, "<=",
                         float(rng.uniform(0.5, 2)))
    obj = {"x": float(rng.uniform(-1, 1))}
    for i in range(nt):
        obj[f"w{i}"] = float(rng.uniform(-2, 2))
        obj[f"y{i}"] = float(rng.uniform(-1, 1))
    p.set_objective(obj)
    sol = solve_bilinear(p, SolverConfig(gap_tolerance=1e-8))
    oracle = _grid_oracle(p, "x")
    assert sol.status == "optimal"
    # Grid oracle is an upper bound; refine alignment with a loose abs slack
    # for off-grid optima of the piecewise-linear value function.
    assert sol.objective <= oracle + 1e-6
    assert sol.objective == pytest.approx(oracle, rel=2e-3, abs=2e-3)
    assert check_solution(p, sol.assignment, 1e-5).ok


@settings(max_examples=200, deadline=None)
@given(
    xl=st.floats(-5, 5), xw=st.floats(0.01, 5),
    yl=st.floats(-5, 5), yw=st.floats(0.01, 5),
    fx=st.floats(0, 1), fy=st.floats(0, 1),
    c=st.floats(-3, 3).filter(lambda v: abs(v) > 1e-3),
)
def test_mccormick_envelope_contains_product(xl, xw, yl, yw, fx, fy, c):
    xu, yu = xl + xw, yl + yw
    x = xl + fx * xw
    y = yl + fy * yw
    term = BilinearTerm("w", "x", "y", c)
    rows = mccormick_rows(term, xl, xu, yl, yu)
    w = c * x * y
    point = {"w": w, "x": x, "y": y}
    for coeffs, sense, rhs in rows:
        lhs = sum(coeffs[k] * point[k] for k in coeffs)
        slack = 1e-9 * (1 + abs(lhs) + abs(rhs))
        if sense == "<=":
            assert lhs <= rhs + slack
        else:
            assert lhs >= rhs - slack


def test_bound_propagation_tightens():
    p = MathProgram()
    p.add_variable("a", 0.0, 100.0)
    p.add_variable("b", 0.0, 100.0)
    p.add_constraint({"a": 1.0, "b": 1.0}, "<=", 10.0)
    p.add_constraint({"a": 1.0}, ">=", 4.0)
    boxes = {"a": (0.0, 100.0), "b": (0.0, 100.0)}
    assert propagate_linear_bounds(p, boxes, passes=2)
    assert boxes["a"][0] == pytest.approx(4.0)
    assert boxes["a"][1] <= 10.0 + 1e-9
    assert boxes["b"][1] <= 6.0 + 1e-9


def test_bound_propagation_detects_empty():
    p = MathProgram()
    p.add_variable("a", 0.0, 1.0)
    p.add_constraint({"a": 1.0}, ">=", 2.0)
    boxes = {"a": (0.0, 1.0)}
    assert not propagate_linear_bounds(p, boxes)


def test_determinism():
    p = _xy_program(maximize=True)
    s1 = solve_bilinear(p)
    s2 = solve_bilinear(p)
    assert s1.objective == s2.objective
    assert s1.node_count == s2.node_count
