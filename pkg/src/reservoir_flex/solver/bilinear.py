"""Spatial branch and bound for programs with bilinear product terms.

Every term ``w = c*x*y`` is relaxed by its four McCormick inequalities over
the current variable box.  Nodes branch on the variable of the most violated
term at its relaxation value; boxes shrink until the relaxation point
satisfies every product to tolerance, so the method converges to the global
optimum.  Fractional binaries (from a discretization pass) are branched
before spatial splits.
"""

from __future__ import annotations

import heapq
import math
import time

from ..program import BilinearTerm, MathProgram
from . import Solution, SolverConfig, _ArrayLP, relative_gap
from .milp import _fractional_binaries

_MIN_BOX = 1e-10


def mccormick_rows(term: BilinearTerm, xl: float, xu: float, yl: float, yu: float
                   ) -> list[tuple[dict[str, float], str, float]]:
    """Four envelope rows for w = c*x*y over [xl,xu] x [yl,yu].

    Rows are stated for p = x*y and multiplied through by c, flipping the
    sense when c is negative.
    """
    w, x, y, c = term.w, term.x, term.y, term.c
    rows = []
    # (coeff_x, coeff_y, rhs_const, sense for p): p >= lo-combinations,
    # p <= mixed combinations.
    envelope = [
        (yl, xl, xl * yl, ">="),
        (yu, xu, xu * yu, ">="),
        (yl, xu, xu * yl, "<="),
        (yu, xl, xl * yu, "<="),
    ]
    for ax, ay, const, sense in envelope:
        # p - ax*x - ay*y >= -const   (or <=)
        if c < 0:
            sense = ">=" if sense == "<=" else "<="
        rows.append(({w: 1.0, x: -c * ax, y: -c * ay}, sense, -c * const))
    return rows


def product_box(c: float, xl: float, xu: float, yl: float, yu: float
                ) -> tuple[float, float]:
    corners = [c * xl * yl, c * xl * yu, c * xu * yl, c * xu * yu]
    return min(corners), max(corners)


def propagate_linear_bounds(program: MathProgram,
                            boxes: dict[str, tuple[float, float]],
                            passes: int = 1) -> bool:
    """Feasibility-based bound tightening on linear rows.

    Returns False when an empty domain is derived.  Kept to a couple of
    passes: the point is to shrink McCormick boxes, not to presolve.
    """
    for _ in range(passes):
        changed = False
        for con in program.constraints:
            items = list(con.coeffs.items())
            lo_sum = hi_sum = 0.0
            lo_parts, hi_parts = {}, {}
            for var, coef in items:
                l, u = boxes[var]
                a, b2 = coef * l, coef * u
                plo, phi = min(a, b2), max(a, b2)
                lo_parts[var], hi_parts[var] = plo, phi
                lo_sum += plo
                hi_sum += phi
            senses = {"<=": ("<=",), ">=": (">=",), "=": ("<=", ">=")}[con.sense]
            for sense in senses:
                for var, coef in items:
                    l, u = boxes[var]
                    if coef == 0.0:
                        continue
                    rest_lo = lo_sum - lo_parts[var]
                    rest_hi = hi_sum - hi_parts[var]
                    if sense == "<=":
                        # coef*var <= rhs - rest_lo
                        cap = con.rhs - rest_lo
                        if coef > 0:
                            new_u = cap / coef
                            if new_u < u - 1e-12 * (1 + abs(u)):
                                u = new_u
                                changed = True
                        else:
                            new_l = cap / coef
                            if new_l > l + 1e-12 * (1 + abs(l)):
                                l = new_l
                                changed = True
                    else:
                        # coef*var >= rhs - rest_hi
                        floor_ = con.rhs - rest_hi
                        if coef > 0:
                            new_l = floor_ / coef
                            if new_l > l + 1e-12 * (1 + abs(l)):
                                l = new_l
                                changed = True
                        else:
                            new_u = floor_ / coef
                            if new_u < u - 1e-12 * (1 + abs(u)):
                                u = new_u
                                changed = True
                    if l > u + 1e-9 * (1 + abs(l)):
                        return False
                    if (l, u) != boxes[var]:
                        a, b2 = coef * l, coef * u
                        plo, phi = min(a, b2), max(a, b2)
                        lo_sum += plo - lo_parts[var]
                        hi_sum += phi - hi_parts[var]
                        lo_parts[var], hi_parts[var] = plo, phi
                        boxes[var] = (l, u)
        if not changed:
            break
    return True


def _interval_div(wlo: float, whi: float, dlo: float, dhi: float
                  ) -> tuple[float, float] | None:
    """[wlo,whi] / [dlo,dhi] for a sign-definite divisor interval."""
    if dlo <= 0.0 <= dhi:
        return None
    corners = [wlo / dlo, wlo / dhi, whi / dlo, whi / dhi]
    return min(corners), max(corners)


def propagate_products(program: MathProgram,
                       boxes: dict[str, tuple[float, float]],
                       rounds: int = 2) -> bool:
    """Interval propagation through w = c*x*y in both directions."""
    for _ in range(rounds):
        changed = False
        for term in program.bilinear_terms:
            xl, xu = boxes[term.x]
            yl, yu = boxes[term.y]
            wl, wu = boxes[term.w]
            plo, phi = product_box(term.c, xl, xu, yl, yu)
            nwl, nwu = max(wl, plo), min(wu, phi)
            if nwl > nwu + 1e-9 * (1.0 + abs(nwl)):
                return False
            if (nwl, nwu) != (wl, wu):
                boxes[term.w] = (nwl, nwu)
                wl, wu = nwl, nwu
                changed = True
            for var, olo, ohi, slo, shi in ((term.x, xl, xu, yl, yu),
                                            (term.y, yl, yu, xl, xu)):
                d1, d2 = term.c * slo, term.c * shi
                div = _interval_div(wl, wu, min(d1, d2), max(d1, d2))
                if div is None:
                    continue
                nlo, nhi = max(olo, div[0]), min(ohi, div[1])
                if nlo > nhi + 1e-9 * (1.0 + abs(nlo)):
                    return False
                if (nlo, nhi) != boxes[var]:
                    boxes[var] = (nlo, nhi)
                    changed = True
        if not changed:
            break
    return True


def tighten_node(program: MathProgram, boxes: dict[str, tuple[float, float]],
                 passes: int = 2) -> bool:
    """Linear FBBT alternated with product propagation."""
    for _ in range(passes):
        if not propagate_linear_bounds(program, boxes, passes=1):
            return False
        if not propagate_products(program, boxes, rounds=1):
            return False
    return True


def _term_violation(term: BilinearTerm, assignment: dict[str, float]) -> float:
    w = assignment[term.w]
    prod = term.c * assignment[term.x] * assignment[term.y]
    return abs(w - prod) / (1.0 + abs(w) + abs(prod))


def solve_bilinear(program: MathProgram, cfg: SolverConfig | None = None,
                   incumbent_heuristic=None) -> Solution:
    """Global optimization of a bilinear program by spatial branch and bound.

    ``incumbent_heuristic``, when given, maps a relaxation assignment to a
    candidate feasible assignment (or None); the scheduler passes a forward
    simulator here, which shortens the search considerably on reservoir
    models.
    """
    cfg = cfg or SolverConfig()
    t0 = time.monotonic()

    root_boxes: dict[str, tuple[float, float]] = {
        v.name: (v.lower, v.upper) for v in program.variables
    }
    if not tighten_node(program, root_boxes, passes=3):
        return Solution("infeasible", {}, math.inf, math.inf, math.inf, 0, 0.0)

    participants = sorted({n for t in program.bilinear_terms for n in (t.x, t.y)})

    incumbent: dict[str, float] | None = None
    incumbent_obj = math.inf
    node_count = 0
    seq = 0
    heap: list[tuple[float, int, dict]] = [(-math.inf, 0, root_boxes)]
    status = "optimal"

    def accept(candidate: dict[str, float], cand_obj: float) -> None:
        nonlocal incumbent, incumbent_obj
        if cand_obj < incumbent_obj:
            incumbent, incumbent_obj = candidate, cand_obj

    while heap:
        bound, _, boxes = heapq.heappop(heap)
        if bound >= incumbent_obj - cfg.gap_tolerance * max(1.0, abs(incumbent_obj)):
            continue
        if node_count >= cfg.node_limit:
            status = "node_limit"
            heapq.heappush(heap, (bound, -1, boxes))
            break
        if cfg.time_limit_seconds is not None and time.monotonic() - t0 > cfg.time_limit_seconds:
            status = "time_limit"
            heapq.heappush(heap, (bound, -1, boxes))
            break

        node_count += 1
        if not tighten_node(program, boxes, passes=2):
            continue
        extra = []
        for term in program.bilinear_terms:
            xl, xu = boxes[term.x]
            yl, yu = boxes[term.y]
            extra.extend(mccormick_rows(term, xl, xu, yl, yu))

        arrays = _ArrayLP(program, overrides=boxes, extra_rows=extra,
                          relax_binaries=True)
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

        fractional = _fractional_binaries(program, assignment,
                                          cfg.integrality_tolerance)
        violations = [(_term_violation(t, assignment), i)
                      for i, t in enumerate(program.bilinear_terms)]
        worst_viol, worst_idx = max(violations, default=(0.0, -1))

        if not fractional and worst_viol <= cfg.feasibility_tolerance:
            accept(assignment, obj)
            continue

        if incumbent_heuristic is not None and (
                node_count == 1 or node_count % max(cfg.heuristic_period, 1) == 0):
            cand = incumbent_heuristic(assignment)
            if cand is not None:
                accept(cand, program.objective_value(cand))
                if obj >= incumbent_obj - cfg.gap_tolerance * max(1.0, abs(incumbent_obj)):
                    continue

        if fractional:
            var_pos = {v.name: i for i, v in enumerate(program.variables)}
            var, _val = min(fractional,
                            key=lambda fv: (-abs(fv[1] - round(fv[1])), var_pos[fv[0]]))
            for fix in (0.0, 1.0):
                child = dict(boxes)
                child[var] = (fix, fix)
                seq += 1
                heapq.heappush(heap, (obj, seq, child))
            continue

        # Spatial branch on the most violated term.
        term = program.bilinear_terms[worst_idx]
        xl, xu = boxes[term.x]
        yl, yu = boxes[term.y]
        wx = (xu - xl) / (1.0 + abs(xu) + abs(xl))
        wy = (yu - yl) / (1.0 + abs(yu) + abs(yl))
        var = term.x if wx >= wy else term.y
        lo, hi = boxes[var]
        if hi - lo <= _MIN_BOX * (1.0 + abs(lo) + abs(hi)):
            # Box numerically a point but violation persists: accept the
            # nearest product-consistent point rather than looping.
            repaired = dict(assignment)
            repaired[term.w] = term.c * assignment[term.x] * assignment[term.y]
            from . import check_solution  # local import to avoid cycle at load

            if check_solution(program, repaired,
                              10 * cfg.feasibility_tolerance).ok:
                accept(repaired, program.objective_value(repaired))
            continue
        point = assignment[var]
        width = hi - lo
        point = min(max(point, lo + 0.2 * width), hi - 0.2 * width)
        for new_box in ((lo, point), (point, hi)):
            child = dict(boxes)
            child[var] = new_box
            seq += 1
            heapq.heappush(heap, (obj, seq, child))

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
