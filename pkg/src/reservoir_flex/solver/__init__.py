"""Embedded desk-scale solver stack.

``solve_lp`` wraps the dense simplex, ``solve_milp`` adds best-first branch
and bound over binaries, and ``solve_bilinear`` handles nonconvex products
through McCormick relaxations and spatial branching.  ``solve`` dispatches
on the program kind.  All solves are deterministic: identical programs give
identical objectives and node counts.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..program import MathProgram, ProgramError
from .simplex import SimplexResult, simplex_solve

__all__ = [
    "Solution",
    "SolverConfig",
    "Violation",
    "ViolationReport",
    "check_solution",
    "solve",
    "solve_lp",
    "solve_milp",
    "solve_bilinear",
]


@dataclass
class SolverConfig:
    feasibility_tolerance: float = 1e-7
    integrality_tolerance: float = 1e-6
    gap_tolerance: float = 1e-6  # relative
    node_limit: int = 500_000
    time_limit_seconds: float | None = None
    branching: str = "most_fractional"  # or "pseudo_cost"
    spatial_branching: str = "largest_mccormick_violation"
    deterministic_parallelism: bool = True
    heuristic_period: int = 5  # run the incumbent heuristic every k-th node

    def __post_init__(self):
        for name in ("feasibility_tolerance", "integrality_tolerance", "gap_tolerance"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")


@dataclass
class Solution:
    status: str  # optimal|feasible|infeasible|unbounded|node_limit|time_limit
    assignment: dict[str, float]
    objective: float
    best_bound: float
    gap: float
    node_count: int
    wall_time: float

    @property
    def ok(self) -> bool:
        return self.status in ("optimal", "feasible")

    def to_dict(self, include_timing: bool = False) -> dict:
        # wall_time is excluded by default so persisted outputs are
        # byte-identical across reruns.
        out = {
            "status": self.status,
            "objective": _json_num(self.objective),
            "best_bound": _json_num(self.best_bound),
            "gap": _json_num(self.gap),
            "node_count": self.node_count,
            "assignment": self.assignment,
        }
        if include_timing:
            out["wall_time"] = self.wall_time
        return out

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _json_num(x: float):
    if x == math.inf:
        return "inf"
    if x == -math.inf:
        return "-inf"
    return x


def relative_gap(objective: float, bound: float) -> float:
    if not math.isfinite(objective):
        return math.inf
    return max(0.0, (objective - bound) / max(1.0, abs(objective)))


# ---------------------------------------------------------------------------
# Feasibility checking
# ---------------------------------------------------------------------------


@dataclass
class Violation:
    kind: str  # "row" | "bound" | "bilinear" | "integrality"
    name: str
    residual: float  # scale-relative residual


@dataclass
class ViolationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def max_residual(self) -> float:
        return max((v.residual for v in self.violations), default=0.0)

    def __str__(self) -> str:
        if self.ok:
            return "feasible"
        lines = [f"{v.kind} {v.name}: residual {v.residual:.3e}" for v in self.violations]
        return "\n".join(lines)


def check_solution(program: MathProgram, assignment: dict[str, float],
                   tol: float = 1e-6) -> ViolationReport:
    """List every constraint violated beyond ``tol``.

    Residuals are measured relative to the largest term in the row, so the
    tolerance is scale-free: a joule-scale balance and a unit-scale clique
    row are judged alike.
    """
    known = set(program.var_names())
    for name in assignment:
        if name not in known:
            raise ProgramError(f"assignment has unknown variable {name!r}")
    missing = known - set(assignment)
    if missing:
        raise ProgramError(f"assignment missing variables: {sorted(missing)[:5]}")

    report = ViolationReport()
    for var in program.variables:
        x = assignment[var.name]
        scale = 1.0 + max(abs(var.lower) if math.isfinite(var.lower) else 0.0,
                          abs(var.upper) if math.isfinite(var.upper) else 0.0,
                          abs(x))
        if x < var.lower and (var.lower - x) / scale > tol:
            report.violations.append(Violation("bound", var.name, (var.lower - x) / scale))
        elif x > var.upper and (x - var.upper) / scale > tol:
            report.violations.append(Violation("bound", var.name, (x - var.upper) / scale))
        if var.kind == "binary":
            frac = abs(x - round(x))
            if frac > tol:
                report.violations.append(Violation("integrality", var.name, frac))

    for con in program.constraints:
        terms = [coef * assignment[v] for v, coef in con.coeffs.items()]
        lhs = math.fsum(terms)
        scale = 1.0 + max((abs(t) for t in terms), default=0.0) + abs(con.rhs)
        resid = 0.0
        if con.sense == "<=":
            resid = lhs - con.rhs
        elif con.sense == ">=":
            resid = con.rhs - lhs
        else:
            resid = abs(lhs - con.rhs)
        if resid / scale > tol:
            report.violations.append(Violation("row", con.name, resid / scale))

    for i, term in enumerate(program.bilinear_terms):
        w = assignment[term.w]
        prod = term.c * assignment[term.x] * assignment[term.y]
        scale = 1.0 + abs(w) + abs(prod)
        resid = abs(w - prod) / scale
        if resid > tol:
            name = f"{term.w}={term.c:g}*{term.x}*{term.y}"
            report.violations.append(Violation("bilinear", name, resid))
    return report


# ---------------------------------------------------------------------------
# MathProgram -> dense array adapter
# ---------------------------------------------------------------------------


class _ArrayLP:
    """Reduced dense form of a program's linear part.

    Fixed variables (lower == upper, possibly via node overrides) are
    substituted out; empty rows are checked for consistency and dropped.
    Row/column equilibration uses powers of two so scaling is exact.
    """

    __slots__ = ("free_names", "col_of", "fixed", "c", "A", "b", "senses",
                 "lower", "upper", "infeasible_row", "n_rows")

    def __init__(self, program: MathProgram,
                 overrides: dict[str, tuple[float, float]] | None = None,
                 extra_rows: list[tuple[dict[str, float], str, float]] | None = None,
                 relax_binaries: bool = False):
        overrides = overrides or {}
        self.infeasible_row: str | None = None
        lower_map: dict[str, float] = {}
        upper_map: dict[str, float] = {}
        for v in program.variables:
            lo, hi = v.lower, v.upper
            if v.kind == "binary" and not relax_binaries:
                pass  # caller fixes binaries through overrides
            if v.name in overrides:
                olo, ohi = overrides[v.name]
                lo, hi = max(lo, olo), min(hi, ohi)
            lower_map[v.name], upper_map[v.name] = lo, hi

        self.fixed = {}
        self.free_names = []
        for v in program.variables:
            lo, hi = lower_map[v.name], upper_map[v.name]
            if lo > hi + 1e-12 * (1.0 + abs(lo)):
                self.infeasible_row = f"bounds:{v.name}"
                lo = hi  # keep arrays well formed
            if lo == hi or (hi - lo) <= 0.0:
                self.fixed[v.name] = lo
            else:
                self.free_names.append(v.name)
        self.col_of = {n: j for j, n in enumerate(self.free_names)}
        n = len(self.free_names)
        self.lower = np.array([lower_map[v] for v in self.free_names])
        self.upper = np.array([upper_map[v] for v in self.free_names])

        rows: list[tuple[dict[str, float], str, float, str]] = [
            (c.coeffs, c.sense, c.rhs, c.name) for c in program.constraints
        ]
        if extra_rows:
            rows += [(co, se, rh, f"x{i}") for i, (co, se, rh) in enumerate(extra_rows)]

        data, senses, rhs = [], [], []
        for coeffs, sense, b, name in rows:
            row = np.zeros(n)
            shift = 0.0
            maxterm = abs(b)
            for var, coef in coeffs.items():
                if var in self.fixed:
                    shift += coef * self.fixed[var]
                    maxterm = max(maxterm, abs(coef * self.fixed[var]))
                else:
                    row[self.col_of[var]] = coef
            b_adj = b - shift
            if not row.any():
                resid = -b_adj if sense == ">=" else (b_adj if sense == "<=" else abs(b_adj))
                tol = 1e-9 * (1.0 + maxterm)
                ok = (abs(b_adj) <= tol) if sense == "=" else (resid >= -tol)
                if not ok and self.infeasible_row is None:
                    self.infeasible_row = name
                continue
            data.append(row)
            senses.append(sense)
            rhs.append(b_adj)
        self.A = np.array(data) if data else np.zeros((0, n))
        self.b = np.array(rhs)
        self.senses = senses
        self.n_rows = len(senses)

        c = np.zeros(n)
        for var, coef in program.objective.items():
            if var in self.col_of:
                c[self.col_of[var]] = coef
        self.c = c

    def solve(self) -> tuple[SimplexResult, np.ndarray | None]:
        """Equality-form conversion, power-of-two scaling, simplex."""
        if self.infeasible_row is not None:
            return SimplexResult("infeasible", None, np.inf, None, None, 0), None
        m, n = self.n_rows, len(self.free_names)
        n_slack = sum(1 for s in self.senses if s != "=")
        A = np.zeros((m, n + n_slack))
        A[:, :n] = self.A
        lower = np.concatenate([self.lower, np.zeros(n_slack)])
        upper = np.concatenate([self.upper, np.zeros(n_slack)])
        k = n
        for i, s in enumerate(self.senses):
            if s == "=":
                continue
            A[i, k] = 1.0
            if s == "<=":
                lower[k], upper[k] = 0.0, np.inf
            else:
                lower[k], upper[k] = -np.inf, 0.0
            k += 1
        c = np.concatenate([self.c, np.zeros(n_slack)])
        b = self.b.copy()

        # Exact equilibration: scale rows then columns by powers of two.
        row_scale = np.ones(m)
        if m:
            mx = np.max(np.abs(A), axis=1)
            nz = mx > 0
            row_scale[nz] = np.exp2(-np.round(np.log2(mx[nz])))
            A = A * row_scale[:, None]
            b = b * row_scale
        col_scale = np.ones(n + n_slack)
        if A.size:
            mx = np.max(np.abs(A), axis=0)
            nz = mx > 0
            col_scale[nz] = np.exp2(-np.round(np.log2(mx[nz])))
            A = A * col_scale[None, :]
        # x = col_scale * x_scaled
        with np.errstate(invalid="ignore"):
            lo_s = lower / col_scale
            hi_s = upper / col_scale
        c_s = c * col_scale

        res = simplex_solve(c_s, A, b, lo_s, hi_s)
        if res.status != "optimal":
            return res, None
        x = res.x[: n + n_slack] * col_scale
        return res, x[:n]

    def assignment(self, x_free: np.ndarray) -> dict[str, float]:
        out = dict(self.fixed)
        for name, j in self.col_of.items():
            out[name] = float(x_free[j])
        return out


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------


def solve_lp(program: MathProgram, cfg: SolverConfig | None = None) -> Solution:
    """Solve a pure LP (no binaries, no bilinear terms)."""
    cfg = cfg or SolverConfig()
    if program.bilinear_terms:
        raise ProgramError("solve_lp: program has bilinear terms")
    if program.n_binary:
        raise ProgramError("solve_lp: program has binary variables")
    t0 = time.monotonic()
    arrays = _ArrayLP(program)
    res, x = arrays.solve()
    wall = time.monotonic() - t0
    if res.status == "infeasible":
        return Solution("infeasible", {}, math.inf, math.inf, math.inf, 1, wall)
    if res.status == "unbounded":
        return Solution("unbounded", {}, -math.inf, -math.inf, math.inf, 1, wall)
    assignment = arrays.assignment(x)
    obj = program.objective_value(assignment)
    return Solution("optimal", assignment, obj, obj, 0.0, 1, wall)


def lp_duals(program: MathProgram) -> tuple[Solution, np.ndarray, list[str]]:
    """LP solve that also returns row duals (testing/diagnostics aid)."""
    arrays = _ArrayLP(program)
    res, x = arrays.solve()
    if res.status != "optimal":
        raise ProgramError(f"lp_duals: status {res.status}")
    assignment = arrays.assignment(x)
    obj = program.objective_value(assignment)
    sol = Solution("optimal", assignment, obj, obj, 0.0, 1, 0.0)
    # Recover duals in original row units (pre-scaling) by re-deriving from
    # the reduced problem: res.duals are for the scaled equality system; we
    # only expose them for diagnostics on unscaled single-use programs.
    names = [c.name for c in program.constraints]
    return sol, res.duals, names


def solve(program: MathProgram, cfg: SolverConfig | None = None,
          incumbent_heuristic=None) -> Solution:
    """Dispatch on program kind (lp / milp / bilinear)."""
    kind = program.kind()
    if kind == "lp":
        return solve_lp(program, cfg)
    if kind == "milp":
        return solve_milp(program, cfg)
    return solve_bilinear(program, cfg, incumbent_heuristic=incumbent_heuristic)


from .milp import solve_milp  # noqa: E402  (cycle-free: milp imports names above)
from .bilinear import solve_bilinear  # noqa: E402
