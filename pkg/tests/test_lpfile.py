import math

import pytest

from reservoir_flex.lpfile import export_lp, matrices_equal, read_lp, write_lp
from reservoir_flex.program import MathProgram, ProgramError


def test_minimal_body_format():
    p = MathProgram()
    p.add_variable("x", 0.0, math.inf)
    p.add_constraint({"x": 1.0}, "<=", 1.0)
    p.set_objective({"x": -1.0})
    text = write_lp(p)
    body = [ln.strip() for ln in text.splitlines()
            if ln.startswith(" ") and ln.strip()]
    assert body == ["obj: - x", "c1: x <= 1"]


def test_round_trip_small():
    p = MathProgram()
    p.add_variable("x", 0.0, 4.0)
    p.add_variable("y", -1.5, math.inf)
    p.add_variable("z", -math.inf, math.inf)
    p.add_variable("fixed", 2.25, 2.25)
    p.add_constraint({"x": 1.0, "y": 2.5}, "<=", 10.0, "cap")
    p.add_constraint({"y": -0.125, "z": 1.0}, ">=", -3.0, "floor")
    p.add_constraint({"x": 1.0, "z": 1.0, "fixed": 1.0}, "=", 5.0, "link")
    p.set_objective({"x": 1.0, "y": -2.0, "z": 0.0625})
    q = read_lp(write_lp(p))
    assert matrices_equal(p, q)


def test_round_trip_awkward_floats():
    p = MathProgram()
    p.add_variable("a", 0.0, 1e10)
    p.add_variable("b", 0.0, 1.0)
    coef = 1.0 / 3.6e9
    p.add_constraint({"a": coef, "b": -0.1 + 0.2 - 0.1 + 1.0}, "<=", math.pi, "r")
    p.set_objective({"a": coef})
    q = read_lp(write_lp(p))
    assert matrices_equal(p, q, tol=0.0)  # repr round-trips exactly


def test_binary_section():
    p = MathProgram()
    p.add_variable("u", 0, 1, kind="binary")
    p.add_variable("v", 0, 1, kind="binary")
    p.add_variable("x", 0.0, 2.0)
    p.add_constraint({"u": 1.0, "v": 1.0}, "<=", 1.0)
    p.set_objective({"x": 1.0, "u": -1.0})
    text = write_lp(p)
    assert "Binaries" in text
    q = read_lp(text)
    assert q.variable("u").kind == "binary"
    assert q.variable("v").kind == "binary"
    assert matrices_equal(p, q)


def test_bilinear_requires_flag():
    p = MathProgram()
    for n in "wxy":
        p.add_variable(n, 0.0, 1.0)
    p.add_bilinear("w", "x", "y", 2.0)
    p.set_objective({"w": 1.0})
    with pytest.raises(ProgramError):
        write_lp(p)
    q = read_lp(write_lp(p, allow_quadratic=True))
    assert matrices_equal(p, q)
    assert q.bilinear_terms[0].c == 2.0


def test_bilinear_negative_coefficient_round_trip():
    p = MathProgram()
    for n in ("w", "x", "y"):
        p.add_variable(n, -2.0, 2.0)
    p.add_bilinear("w", "x", "y", -0.75)
    p.set_objective({"w": 1.0})
    q = read_lp(write_lp(p, allow_quadratic=True))
    assert matrices_equal(p, q)


def test_export_and_read_path(tmp_path):
    p = MathProgram()
    p.add_variable("x", 0.0, 3.0)
    p.add_constraint({"x": 2.0}, "<=", 5.0)
    p.set_objective({"x": -1.0})
    path = tmp_path / "model.lp"
    export_lp(p, path)
    q = read_lp(path)
    assert matrices_equal(p, q)


def test_maximize_normalized_to_minimize():
    text = """Maximize
 obj: 3 x + 2 y
Subject To
 c1: x + y <= 4
End
"""
    p = read_lp(text)
    assert p.objective == {"x": -3.0, "y": -2.0}
