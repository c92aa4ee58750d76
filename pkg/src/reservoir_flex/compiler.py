"""Lowers a ModelGraph to a MathProgram; discretization and strengthening.

Variable naming is stable across runs: ``<entity>__<t>`` for levels,
observers, fuels and flows, ``<entity>__lvl<i>__<t>`` for discretization
binaries and ``<observer>__part<i>__<t>`` for partial temperatures.

Emission rules for products: a relation ``w = c*x*y`` becomes a bilinear
term unless a factor is fixed (then it degrades to a linear row, e.g. at a
pinned initial state).  Flow couplings evaluate observer temperatures at
the end state of the flow step; decay laws use the start state, as in the
source state equations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    FlowRef,
    ModelError,
    ModelGraph,
    ObserverSpec,
    SeriesRef,
    validate,
)
from .model import MWH_J
from .program import MathProgram, ProgramError


class CompileError(ValueError):
    pass


def _vn(entity: str, t: int) -> str:
    return f"{entity}__{t}"


# ---------------------------------------------------------------------------
# compile
# ---------------------------------------------------------------------------


def compile_model(graph: ModelGraph) -> MathProgram:
    """Lower a validated graph to its canonical optimization problem."""
    report = validate(graph)
    if not report.ok:
        raise CompileError(f"graph does not validate:\n{report}")
    T = graph.time_grid.horizon_steps
    dt = graph.time_grid.step_seconds
    prog = MathProgram()

    # --- reservoir levels -------------------------------------------------
    for r in graph.reservoirs:
        init = graph.initial_value(r)
        for t in range(T + 1):
            lo, hi = r.level_lower, r.level_upper
            if t == 0 and init is not None:
                lo = hi = init
            name = prog.add_variable(_vn(r.id, t), lo, hi)
            prog.origin[name] = (r.id, t)

    def level_box(rid: str, t: int) -> tuple[float, float]:
        v = prog.variable(_vn(rid, t))
        return v.lower, v.upper

    # --- observers ----------------------------------------------------------
    obs_specs: dict[str, ObserverSpec] = {o.id: o for o in graph.observers}
    kinds = graph.quantity_kinds()
    den_entity: dict[str, str | None] = {}

    for o in graph.observers:
        lo_decl = hi_decl = None
        if o.bounds is not None:
            lo_decl, hi_decl = o.bounds
        for t in range(T + 1):
            lo_dered, hi_dered = _observer_interval(o, kinds, level_box, t)
            lo = lo_dered if lo_decl is None else max(lo_decl, lo_dered)
            hi = hi_dered if hi_decl is None else min(hi_decl, hi_dered)
            if lo > hi:
                if lo - hi <= 1e-9 * (1.0 + abs(lo)):
                    lo = hi = 0.5 * (lo + hi)  # float dust at a pinned state
                else:
                    # Genuinely contradictory: keep the declared box and let
                    # the solver prove infeasibility through the def rows.
                    lo = -math.inf if lo_decl is None else lo_decl
                    hi = math.inf if hi_decl is None else hi_decl
            name = prog.add_variable(_vn(o.id, t), lo, hi)
            prog.origin[name] = (o.id, t)
        if o.form == "energy_over_heat_capacity_mass" and len(
                o.mass_operands(kinds)) > 1:
            den_entity[o.id] = f"{o.id}__den"
            for t in range(T + 1):
                lo = sum(c * level_box(rid, t)[0] for rid, c in o.mass_operands(kinds))
                hi = sum(c * level_box(rid, t)[1] for rid, c in o.mass_operands(kinds))
                name = prog.add_variable(_vn(den_entity[o.id], t), lo, hi)
                prog.origin[name] = (den_entity[o.id], t)
        else:
            den_entity[o.id] = None

    # --- process fuels / activities -----------------------------------------
    # A label is a heat slot when a coupling defines it; other labels are
    # tags letting couplings reference that effect as their mass flow.
    heat_slots = {(c.heat_flow.process, c.heat_flow.flow) for c in graph.couplings}

    activity: dict[str, list[tuple[str, float]]] = {}  # pid -> [(entity, coef)]
    totals: dict[str, list[tuple[str, float]]] = {}    # pid -> consumption entities
    for p in graph.processes:
        if p.fuel_inputs:
            parts, tot = [], []
            for f in p.fuel_inputs:
                entity = f"{p.id}__{f.fuel}"
                single = len(p.fuel_inputs) == 1
                lo = p.power_lower * dt if single else 0.0
                hi = p.power_upper * dt
                for t in range(T):
                    name = prog.add_variable(_vn(entity, t), lo, hi)
                    prog.origin[name] = (entity, t)
                parts.append((entity, f.efficiency))
                tot.append((entity, 1.0))
            activity[p.id] = parts
            totals[p.id] = tot
            if len(p.fuel_inputs) > 1:
                for t in range(T):
                    coeffs = {_vn(e, t): 1.0 for e, _ in tot}
                    if math.isfinite(p.power_upper):
                        prog.add_constraint(coeffs, "<=", p.power_upper * dt,
                                            f"powerhi__{p.id}__{t}")
                    if p.power_lower > 0:
                        prog.add_constraint(coeffs, ">=", p.power_lower * dt,
                                            f"powerlo__{p.id}__{t}")
        else:
            needed = any((p.id, e.flow) not in heat_slots for e in p.effects) or any(
                isinstance(c.mass_flow, FlowRef) and c.mass_flow.process == p.id
                for c in graph.couplings)
            if needed:
                for t in range(T):
                    name = prog.add_variable(_vn(p.id, t), p.power_lower * dt,
                                             p.power_upper * dt)
                    prog.origin[name] = (p.id, t)
                activity[p.id] = [(p.id, 1.0)]
                totals[p.id] = [(p.id, 1.0)]
            else:
                activity[p.id] = []
                totals[p.id] = []

    # --- coupled flow slots ---------------------------------------------------
    # slot_terms[(pid, label)](t) -> list[(var, coef)] | float constant added
    proc_by_id = {p.id: p for p in graph.processes}

    def mass_side(c) -> tuple[str | None, float, np.ndarray | None]:
        """Resolve the coupling mass flow to (entity, scale) or a series."""
        if isinstance(c.mass_flow, SeriesRef):
            return None, 1.0, graph.series(c.mass_flow.series)
        pid = c.mass_flow.process
        parts = activity[pid]
        if not parts:
            raise CompileError(f"coupling mass flow {pid!r} has no activity")
        entity, eff = parts[0]
        scale = eff
        if c.mass_flow.flow is not None:
            effect = next(e for e in proc_by_id[pid].effects
                          if e.flow == c.mass_flow.flow)
            scale *= effect.gain
        return entity, scale, None

    slot_linear: dict[tuple[str, int], list[tuple[str, float]]] = {}
    slot_const: dict[tuple[str, int], float] = {}
    slot_var: dict[tuple[str, int], str] = {}

    mass_tags = {(c.mass_flow.process, c.mass_flow.flow)
                 for c in graph.couplings if isinstance(c.mass_flow, FlowRef)}
    for p in graph.processes:
        labels = []
        for e in p.effects:
            if e.flow is not None and e.flow not in labels:
                labels.append(e.flow)
        for label in labels:
            if (p.id, label) not in heat_slots:
                if (p.id, label) not in mass_tags:
                    raise CompileError(
                        f"process {p.id!r}: flow {label!r} is neither a heat slot "
                        f"nor a coupling mass reference")
                continue
            coupling = graph.coupling_for(p.id, label)
            C = coupling.heat_capacity
            m_entity, m_scale, m_series = mass_side(coupling)
            temp = coupling.temperature
            for t in range(T):
                key = (f"{p.id}.{label}", t)
                if isinstance(temp, FlowRef):  # observer, end-of-step state
                    t_var = _vn(temp.process, t + 1)
                    tv = prog.variable(t_var)
                    if m_series is not None:
                        coef = C * float(m_series[t])
                        if tv.is_fixed:
                            slot_const[key] = coef * tv.lower
                        else:
                            slot_linear[key] = [(t_var, coef)]
                        continue
                    m_var = _vn(m_entity, t)
                    mv = prog.variable(m_var)
                    if tv.is_fixed:
                        slot_linear[key] = [(m_var, C * m_scale * tv.lower)]
                        continue
                    if mv.is_fixed:
                        slot_linear[key] = [(t_var, C * m_scale * mv.lower)]
                        continue
                    wlo, whi = _product_interval(C * m_scale, mv.lower, mv.upper,
                                                 tv.lower, tv.upper)
                    fname = prog.add_variable(_vn(f"{p.id}__{label}", t), wlo, whi)
                    prog.origin[fname] = (f"{p.id}__{label}", t)
                    prog.add_bilinear(fname, m_var, t_var, C * m_scale)
                    slot_var[key] = fname
                else:
                    tval = (float(graph.series(temp.series)[t])
                            if isinstance(temp, SeriesRef) else float(temp))
                    if m_series is not None:
                        slot_const[key] = C * tval * float(m_series[t])
                    else:
                        slot_linear[key] = [(_vn(m_entity, t), C * m_scale * tval)]

    # --- state equations -------------------------------------------------------
    for r in graph.reservoirs:
        exo_in = graph.series(r.exogenous_inflow) if r.exogenous_inflow else None
        exo_out = graph.series(r.exogenous_outflow) if r.exogenous_outflow else None
        for t in range(T):
            coeffs: dict[str, float] = {_vn(r.id, t + 1): 1.0}
            coeffs[_vn(r.id, t)] = coeffs.get(_vn(r.id, t), 0.0) - 1.0
            rhs = 0.0
            for p in graph.processes:
                for e in p.effects:
                    if e.reservoir != r.id:
                        continue
                    sign = -1.0 if e.direction == "inflow" else 1.0
                    if e.flow is None or (p.id, e.flow) not in heat_slots:
                        for entity, eff in activity[p.id]:
                            var = _vn(entity, t)
                            coeffs[var] = coeffs.get(var, 0.0) + sign * e.gain * eff
                    else:
                        key = (f"{p.id}.{e.flow}", t)
                        if key in slot_var:
                            var = slot_var[key]
                            coeffs[var] = coeffs.get(var, 0.0) + sign * e.gain
                        elif key in slot_linear:
                            for var, coef in slot_linear[key]:
                                coeffs[var] = coeffs.get(var, 0.0) + sign * e.gain * coef
                        else:
                            rhs -= sign * e.gain * slot_const.get(key, 0.0)
            if r.decay is not None:
                d = r.decay
                k = d.coefficient * dt
                if d.form == "affine_in_observer":
                    var = _vn(d.observer, t)
                    coeffs[var] = coeffs.get(var, 0.0) + k
                else:
                    var = _vn(r.id, t)
                    coeffs[var] = coeffs.get(var, 0.0) + k
                if d.reference_signal is not None:
                    if d.reference_signal in obs_specs:
                        rv = _vn(d.reference_signal, t)
                        coeffs[rv] = coeffs.get(rv, 0.0) - k
                    else:
                        rhs += k * float(graph.series(d.reference_signal)[t])
            if exo_in is not None:
                rhs += float(exo_in[t])
            if exo_out is not None:
                rhs -= float(exo_out[t])
            prog.add_constraint(coeffs, "=", rhs, f"state__{r.id}__{t}")

    # --- observer definitions ---------------------------------------------------
    for o in graph.observers:
        for t in range(T + 1):
            _emit_observer_def(prog, o, kinds, den_entity[o.id], t)

    # --- observer bound rows ------------------------------------------------------
    for o in graph.observers:
        if o.bounds is None:
            continue
        lo, hi = o.bounds
        for t in range(T + 1):
            if o.bound_encoding == "direct":
                if lo is not None:
                    prog.add_constraint({_vn(o.id, t): 1.0}, ">=", lo,
                                        f"obslo__{o.id}__{t}")
                if hi is not None:
                    prog.add_constraint({_vn(o.id, t): 1.0}, "<=", hi,
                                        f"obshi__{o.id}__{t}")
            else:  # cross_multiplied: lo * sum(c_i m_i) <= k_E * E <= hi * sum
                energy = o.energy_operands(kinds)
                masses = o.mass_operands(kinds)
                (e_rid, e_coef), = energy
                if lo is not None:
                    coeffs = {_vn(e_rid, t): e_coef}
                    for rid, c in masses:
                        coeffs[_vn(rid, t)] = coeffs.get(_vn(rid, t), 0.0) - lo * c
                    prog.add_constraint(coeffs, ">=", 0.0, f"obslo__{o.id}__{t}")
                if hi is not None:
                    coeffs = {_vn(e_rid, t): e_coef}
                    for rid, c in masses:
                        coeffs[_vn(rid, t)] = coeffs.get(_vn(rid, t), 0.0) - hi * c
                    prog.add_constraint(coeffs, "<=", 0.0, f"obshi__{o.id}__{t}")

    # --- ramping -------------------------------------------------------------------
    for p in graph.processes:
        if p.ramp_ratio_lower is None and p.ramp_ratio_upper is None:
            continue
        tot = totals[p.id]
        if not tot:
            continue
        for t in range(T - 1):
            nxt = {_vn(e, t + 1): c for e, c in tot}
            if p.ramp_ratio_lower is not None:
                coeffs = dict(nxt)
                for e, c in tot:
                    v = _vn(e, t)
                    coeffs[v] = coeffs.get(v, 0.0) - p.ramp_ratio_lower * c
                prog.add_constraint(coeffs, ">=", 0.0, f"ramplo__{p.id}__{t}")
            if p.ramp_ratio_upper is not None:
                coeffs = dict(nxt)
                for e, c in tot:
                    v = _vn(e, t)
                    coeffs[v] = coeffs.get(v, 0.0) - p.ramp_ratio_upper * c
                prog.add_constraint(coeffs, "<=", 0.0, f"ramphi__{p.id}__{t}")

    # --- terminal conditions ----------------------------------------------------------
    for r in graph.reservoirs:
        if r.terminal_level is not None:
            prog.add_constraint({_vn(r.id, T): 1.0}, r.terminal_level.sense,
                                r.terminal_level.value, f"terminal__{r.id}")

    # --- objective: priced fuel consumption ----------------------------------------------
    for p in graph.processes:
        for f in p.fuel_inputs:
            prices = graph.series(f.price_series)
            entity = f"{p.id}__{f.fuel}"
            for t in range(T):
                prog.add_objective_term(_vn(entity, t), float(prices[t]) / MWH_J)

    if graph.discretize is not None:
        prog.meta["discretize_tag"] = {
            "reservoir": graph.discretize.reservoir,
            "levels": list(graph.discretize.levels),
            "scale_constant": graph.discretize.heat_capacity,
        }
    return prog


def _observer_interval(o: ObserverSpec, kinds, level_box, t
                       ) -> tuple[float, float]:
    if o.form == "linear_combination":
        lo = hi = 0.0
        for rid, c in o.operands:
            blo, bhi = level_box(rid, t)
            a, b = c * blo, c * bhi
            lo += min(a, b)
            hi += max(a, b)
        return lo, hi
    (e_rid, e_coef), = o.energy_operands(kinds)
    e_lo, e_hi = level_box(e_rid, t)
    den_lo = sum(c * level_box(rid, t)[0] for rid, c in o.mass_operands(kinds))
    den_hi = sum(c * level_box(rid, t)[1] for rid, c in o.mass_operands(kinds))
    if den_lo <= 0:
        return -math.inf, math.inf
    vals = [e_coef * e_lo / den_hi, e_coef * e_lo / den_lo,
            e_coef * e_hi / den_hi, e_coef * e_hi / den_lo]
    return min(vals), max(vals)


def _product_interval(c, xlo, xhi, ylo, yhi):
    vals = [c * xlo * ylo, c * xlo * yhi, c * xhi * ylo, c * xhi * yhi]
    return min(vals), max(vals)


def _emit_observer_def(prog: MathProgram, o: ObserverSpec, kinds,
                       den: str | None, t: int) -> None:
    row = f"obsdef__{o.id}__{t}"
    if o.form == "linear_combination":
        coeffs = {_vn(o.id, t): 1.0}
        for rid, c in o.operands:
            coeffs[_vn(rid, t)] = coeffs.get(_vn(rid, t), 0.0) - c
        prog.add_constraint(coeffs, "=", 0.0, row)
        return
    (e_rid, e_coef), = o.energy_operands(kinds)
    masses = o.mass_operands(kinds)
    e_var = _vn(e_rid, t)
    t_var = _vn(o.id, t)
    if den is not None:
        den_var = _vn(den, t)
        coeffs = {den_var: 1.0}
        for rid, c in masses:
            coeffs[_vn(rid, t)] = coeffs.get(_vn(rid, t), 0.0) - c
        prog.add_constraint(coeffs, "=", 0.0, f"dendef__{o.id}__{t}")
        _emit_product_eq(prog, e_var, den_var, t_var, 1.0 / e_coef, row)
    else:
        (m_rid, m_coef), = masses
        _emit_product_eq(prog, e_var, _vn(m_rid, t), t_var, m_coef / e_coef, row)


def _emit_product_eq(prog: MathProgram, w: str, x: str, y: str, c: float,
                     name: str) -> None:
    """w = c*x*y; fixed factors fold the relation into a linear row."""
    xv, yv = prog.variable(x), prog.variable(y)
    if xv.is_fixed and yv.is_fixed:
        prog.add_constraint({w: 1.0}, "=", c * xv.lower * yv.lower, name)
    elif xv.is_fixed:
        prog.add_constraint({w: 1.0, y: -c * xv.lower}, "=", 0.0, name)
    elif yv.is_fixed:
        prog.add_constraint({w: 1.0, x: -c * yv.lower}, "=", 0.0, name)
    else:
        prog.add_bilinear(w, x, y, c)


# ---------------------------------------------------------------------------
# Discretization (partial temperatures with big-M rows)
# ---------------------------------------------------------------------------


@dataclass
class DiscretizationSpec:
    target_reservoir: str
    levels: tuple[float, ...]
    scale_constant: float  # the heat capacity dividing the energy
    clique_strengthening: bool = False
    lower_bound_strengthening: bool = False
    tight_big_m: bool = True  # per-level caps E_max/(C_p*M_i) instead of one M

    def __post_init__(self):
        lv = tuple(float(x) for x in self.levels)
        if not lv:
            raise CompileError("discretization needs at least one level")
        if any(b <= a for a, b in zip(lv, lv[1:])):
            raise CompileError("levels must be strictly increasing")
        if lv[0] <= 0:
            raise CompileError("levels must be positive (they divide the energy)")
        self.levels = lv

    @classmethod
    def from_tag(cls, tag, **kw) -> "DiscretizationSpec":
        return cls(tag.reservoir, tuple(tag.levels), tag.heat_capacity, **kw)


def discretize(program: MathProgram, spec: DiscretizationSpec) -> MathProgram:
    """Restrict the target mass to the level set; linearize its products.

    Every bilinear term ``E = c*m*T`` whose mass factor belongs to the target
    reservoir is replaced by binary level selectors, partial temperatures and
    the three big-M rows tying them together.
    """
    target = spec.target_reservoir
    hits: list[tuple[int, object]] = []  # (t, term)
    for term in program.bilinear_terms:
        for cand, other in ((term.x, term.y), (term.y, term.x)):
            entity_t = program.origin.get(cand)
            if entity_t and entity_t[0] == target:
                hits.append((entity_t[1], term))
                break
    if not hits:
        raise CompileError(
            f"reservoir {target!r} appears in no bilinear term; nothing to discretize")

    out = program_copy(program)
    hit_keys = {(t.w, t.x, t.y) for _, t in hits}
    out.bilinear_terms = [t for t in out.bilinear_terms
                          if (t.w, t.x, t.y) not in hit_keys]

    levels = spec.levels
    M = len(levels)
    meta_times = []
    first_term = hits[0][1]
    mass_is_x = program.origin.get(first_term.x, ("",))[0] == target
    obs_var = first_term.y if mass_is_x else first_term.x
    t_entity = program.origin.get(obs_var, (obs_var.rsplit("__", 1)[0],))[0]

    for t, term in sorted(hits, key=lambda h: h[0]):
        mass_first = program.origin.get(term.x, ("",))[0] == target
        m_var = term.x if mass_first else term.y
        t_var = term.y if mass_first else term.x
        e_var = term.w
        c = term.c
        if abs(c - spec.scale_constant) > 1e-9 * max(1.0, abs(c)):
            raise CompileError(
                f"term at step {t}: coefficient {c} does not match "
                f"scale_constant {spec.scale_constant}")
        ev = out.variable(e_var)
        mv = out.variable(m_var)
        if not math.isfinite(ev.upper):
            raise CompileError(f"{e_var}: finite energy upper bound required for big-M")
        if mv.lower <= 0:
            raise CompileError(f"{m_var}: positive mass lower bound required for big-M")
        big_m = ev.upper / (c * mv.lower)
        meta_times.append(t)

        if M == 1:
            out.add_constraint({m_var: 1.0}, "=", levels[0], f"lvldef__{target}__{t}")
            out.add_constraint({e_var: 1.0, t_var: -c * levels[0]}, "=", 0.0,
                               f"partdef__{target}__{t}")
            continue

        bins = []
        for i in range(M):
            b = out.add_variable(f"{target}__lvl{i}__{t}", 0.0, 1.0, kind="binary")
            out.origin[b] = (f"{target}__lvl{i}", t)
            bins.append(b)
        out.add_constraint({b: 1.0 for b in bins}, "=", 1.0,
                           f"lvlsum__{target}__{t}")
        out.add_constraint(
            dict({m_var: 1.0}, **{b: -lv for b, lv in zip(bins, levels)}),
            "=", 0.0, f"lvldef__{target}__{t}")

        parts = []
        for i, lv in enumerate(levels):
            # Activation constant: must dominate E/(c*level_i) whenever the
            # selector is off; the per-level cap E_max/(c*M_i) is valid and
            # tighter than the uniform E_max/(c*m_min).
            k_i = ev.upper / (c * lv) if spec.tight_big_m else big_m
            part = out.add_variable(f"{t_entity}__part{i}__{t}", 0.0, k_i)
            out.origin[part] = (f"{t_entity}__part{i}", t)
            parts.append(part)
            inv = 1.0 / (c * lv)
            # part >= E*inv - k_i*(1 - bin)
            out.add_constraint({part: 1.0, e_var: -inv, bins[i]: -k_i}, ">=",
                               -k_i, f"bigmlo__{t_entity}__{i}__{t}")
            out.add_constraint({part: 1.0, e_var: -inv}, "<=", 0.0,
                               f"bigmmid__{t_entity}__{i}__{t}")
            out.add_constraint({part: 1.0, bins[i]: -k_i}, "<=", 0.0,
                               f"bigmhi__{t_entity}__{i}__{t}")
        out.add_constraint(
            dict({t_var: 1.0}, **{prt: -1.0 for prt in parts}),
            "=", 0.0, f"partsum__{t_entity}__{t}")

    out.meta["discretization"] = {
        "target": target,
        "levels": list(levels),
        "scale_constant": spec.scale_constant,
        "times": meta_times,
        "t_entity": t_entity,
    }
    return out


def strengthen(program: MathProgram, spec: DiscretizationSpec) -> MathProgram:
    """Optional tightening rows; never changes the optimal objective.

    Adds partial-temperature lower bounds (E_min/(C_p*m_max) scaled by the
    selector) and pairwise clique rows over the level binaries.  Both are
    redundant at integer points; the lower bounds may tighten the LP
    relaxation when the energy floor is positive.
    """
    meta = program.meta.get("discretization")
    if not meta or meta["target"] != spec.target_reservoir:
        raise CompileError("strengthen: program was not discretized for this target")
    out = program_copy(program)
    target = meta["target"]
    levels = meta["levels"]
    c = meta["scale_constant"]
    t_entity = meta["t_entity"]
    M = len(levels)
    if M < 2:
        return out
    for t in meta["times"]:
        e_var = None
        # Recover the energy variable from the big-M middle row.
        row = next(r for r in out.constraints
                   if r.name == f"bigmmid__{t_entity}__0__{t}")
        e_var = next(v for v in row.coeffs if not v.startswith(t_entity))
        ev = out.variable(e_var)
        m_var_row = next(r for r in out.constraints
                         if r.name == f"lvldef__{target}__{t}")
        m_var = next(v for v in m_var_row.coeffs if out.origin.get(v, ("",))[0] == target)
        mv = out.variable(m_var)
        if spec.lower_bound_strengthening:
            floor = ev.lower / (c * mv.upper)
            for i in range(M):
                out.add_constraint(
                    {f"{t_entity}__part{i}__{t}": 1.0,
                     f"{target}__lvl{i}__{t}": -floor},
                    ">=", 0.0, f"partfloor__{t_entity}__{i}__{t}")
        if spec.clique_strengthening:
            for i in range(M):
                for j in range(i + 1, M):
                    out.add_constraint(
                        {f"{target}__lvl{i}__{t}": 1.0,
                         f"{target}__lvl{j}__{t}": 1.0},
                        "<=", 1.0, f"clique__{target}__{i}_{j}__{t}")
    return out


def program_copy(program: MathProgram) -> MathProgram:
    out = MathProgram()
    for v in program.variables:
        out.add_variable(v.name, v.lower, v.upper, v.kind)
    for con in program.constraints:
        out.add_constraint(dict(con.coeffs), con.sense, con.rhs, con.name)
    for t in program.bilinear_terms:
        out.add_bilinear(t.w, t.x, t.y, t.c)
    out.set_objective(dict(program.objective), program.objective_constant)
    out.origin = dict(program.origin)
    out.meta = dict(program.meta)
    return out


def relax_to_lp(program: MathProgram) -> MathProgram:
    """Continuous relaxation: binaries become [0, 1] continuous variables."""
    out = MathProgram()
    for v in program.variables:
        out.add_variable(v.name, v.lower, v.upper, "continuous")
    for con in program.constraints:
        out.add_constraint(dict(con.coeffs), con.sense, con.rhs, con.name)
    for t in program.bilinear_terms:
        out.add_bilinear(t.w, t.x, t.y, t.c)
    out.set_objective(dict(program.objective), program.objective_constant)
    out.origin = dict(program.origin)
    out.meta = dict(program.meta)
    return out
