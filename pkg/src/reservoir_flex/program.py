"""Canonical optimization-problem container.

A :class:`MathProgram` is the meeting point between the model compiler and
the embedded solvers: continuous/binary variables with bounds, dense-ish
linear rows, an optional list of bilinear product definitions ``w = c*x*y``,
and a linear objective (always minimized).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

SENSES = ("<=", "=", ">=")


class ProgramError(ValueError):
    """Raised for malformed programs (unknown names, bad bounds, ...)."""


@dataclass
class Variable:
    name: str
    lower: float
    upper: float
    kind: str = "continuous"  # "continuous" | "binary"

    def __post_init__(self):
        if self.kind not in ("continuous", "binary"):
            raise ProgramError(f"unknown variable kind {self.kind!r}")
        if self.lower > self.upper:
            raise ProgramError(
                f"variable {self.name}: lower {self.lower} > upper {self.upper}"
            )

    @property
    def is_fixed(self) -> bool:
        return self.lower == self.upper


@dataclass
class LinearConstraint:
    name: str
    coeffs: dict[str, float]
    sense: str
    rhs: float

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ProgramError(f"constraint {self.name}: bad sense {self.sense!r}")


@dataclass
class BilinearTerm:
    """Encodes the nonconvex equality ``w = c * x * y``."""

    w: str
    x: str
    y: str
    c: float


@dataclass
class MathProgram:
    variables: list[Variable] = field(default_factory=list)
    constraints: list[LinearConstraint] = field(default_factory=list)
    bilinear_terms: list[BilinearTerm] = field(default_factory=list)
    objective: dict[str, float] = field(default_factory=dict)
    objective_constant: float = 0.0
    # Maps a variable name back to the model entity and time step it came from.
    origin: dict[str, tuple[str, int]] = field(default_factory=dict)
    # Free-form annotations (e.g. discretization bookkeeping); serialized.
    meta: dict = field(default_factory=dict)
    _index: dict[str, int] = field(default_factory=dict, repr=False)

    # -- construction -----------------------------------------------------

    def add_variable(
        self, name: str, lower: float, upper: float, kind: str = "continuous"
    ) -> str:
        if name in self._index:
            raise ProgramError(f"duplicate variable {name!r}")
        self._index[name] = len(self.variables)
        self.variables.append(Variable(name, float(lower), float(upper), kind))
        return name

    def add_constraint(
        self, coeffs: dict[str, float], sense: str, rhs: float, name: str | None = None
    ) -> str:
        if name is None:
            name = f"c{len(self.constraints) + 1}"
        clean = {}
        for var, coef in coeffs.items():
            if var not in self._index:
                raise ProgramError(f"constraint {name}: unknown variable {var!r}")
            if coef != 0.0:
                clean[var] = clean.get(var, 0.0) + float(coef)
        self.constraints.append(LinearConstraint(name, clean, sense, float(rhs)))
        return name

    def add_bilinear(self, w: str, x: str, y: str, c: float) -> None:
        for v in (w, x, y):
            if v not in self._index:
                raise ProgramError(f"bilinear term: unknown variable {v!r}")
            var = self.variables[self._index[v]]
            if not (math.isfinite(var.lower) and math.isfinite(var.upper)):
                raise ProgramError(
                    f"bilinear term needs finite bounds on {v!r}, "
                    f"got [{var.lower}, {var.upper}]"
                )
        self.bilinear_terms.append(BilinearTerm(w, x, y, float(c)))

    def set_objective(self, coeffs: dict[str, float], constant: float = 0.0) -> None:
        for var in coeffs:
            if var not in self._index:
                raise ProgramError(f"objective: unknown variable {var!r}")
        self.objective = {v: float(k) for v, k in coeffs.items() if k != 0.0}
        self.objective_constant = float(constant)

    def add_objective_term(self, var: str, coef: float) -> None:
        if var not in self._index:
            raise ProgramError(f"objective: unknown variable {var!r}")
        if coef != 0.0:
            self.objective[var] = self.objective.get(var, 0.0) + float(coef)

    # -- lookup -----------------------------------------------------------

    def variable(self, name: str) -> Variable:
        try:
            return self.variables[self._index[name]]
        except KeyError:
            raise ProgramError(f"unknown variable {name!r}") from None

    def has_variable(self, name: str) -> bool:
        return name in self._index

    def var_names(self) -> list[str]:
        return [v.name for v in self.variables]

    @property
    def n_binary(self) -> int:
        return sum(1 for v in self.variables if v.kind == "binary")

    def objective_value(self, assignment: dict[str, float]) -> float:
        """Objective at an assignment, summed stably (fsum)."""
        terms = [coef * assignment[var] for var, coef in self.objective.items()]
        return math.fsum(terms) + self.objective_constant

    def kind(self) -> str:
        """Problem class: 'lp', 'milp', or 'bilinear'."""
        if self.bilinear_terms:
            return "bilinear"
        if self.n_binary:
            return "milp"
        return "lp"

    def summary(self) -> str:
        return (
            f"{len(self.variables)} variables ({self.n_binary} binary), "
            f"{len(self.constraints)} linear constraints, "
            f"{len(self.bilinear_terms)} bilinear terms"
        )

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        def num(x):
            if x == math.inf:
                return None
            if x == -math.inf:
                return None
            return x

        return {
            "variables": [
                {
                    "name": v.name,
                    "kind": v.kind,
                    "lower": None if v.lower == -math.inf else v.lower,
                    "upper": None if v.upper == math.inf else v.upper,
                }
                for v in self.variables
            ],
            "constraints": [
                {"name": c.name, "coeffs": c.coeffs, "sense": c.sense, "rhs": c.rhs}
                for c in self.constraints
            ],
            "bilinear": [
                {"w": t.w, "x": t.x, "y": t.y, "c": t.c} for t in self.bilinear_terms
            ],
            "objective": {"coeffs": self.objective, "constant": self.objective_constant},
            "origin": {k: list(v) for k, v in self.origin.items()},
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MathProgram":
        prog = cls()
        for v in data["variables"]:
            lo = -math.inf if v["lower"] is None else v["lower"]
            hi = math.inf if v["upper"] is None else v["upper"]
            prog.add_variable(v["name"], lo, hi, v.get("kind", "continuous"))
        for c in data["constraints"]:
            prog.add_constraint(c["coeffs"], c["sense"], c["rhs"], c["name"])
        for t in data.get("bilinear", []):
            prog.add_bilinear(t["w"], t["x"], t["y"], t["c"])
        obj = data.get("objective", {})
        prog.set_objective(obj.get("coeffs", {}), obj.get("constant", 0.0))
        prog.origin = {k: (v[0], v[1]) for k, v in data.get("origin", {}).items()}
        prog.meta = data.get("meta", {})
        return prog

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "MathProgram":
        return cls.from_dict(json.loads(text))
