"""Forward simulation of reservoir dynamics under given controls.

Mirrors the compiler's semantics exactly (same state equations, decay at
the start state, coupling temperatures at the end state), so a simulated
trajectory plugs into a compiled program as a feasible assignment.  Mass
levels never depend on temperatures, so each step advances masses first and
then solves a small linear system for the energy levels whose couplings
reference end-of-step observers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import FlowRef, ModelError, ModelGraph, SeriesRef
from .program import MathProgram

__all__ = ["Trajectory", "simulate", "trajectory_assignment", "controls_from_assignment"]


@dataclass
class Trajectory:
    levels: dict[str, np.ndarray]      # reservoir -> T+1 values
    observers: dict[str, np.ndarray]   # observer -> T+1 values
    flows: dict[str, np.ndarray]       # coupled slot entity -> T values
    controls: dict[str, np.ndarray]    # fuel / activity entity -> T values

    def level(self, rid: str, t: int) -> float:
        return float(self.levels[rid][t])


def _control_entities(graph: ModelGraph) -> list[str]:
    heat_slots = {(c.heat_flow.process, c.heat_flow.flow) for c in graph.couplings}
    names = []
    for p in graph.processes:
        if p.fuel_inputs:
            names.extend(f"{p.id}__{f.fuel}" for f in p.fuel_inputs)
        else:
            needed = any((p.id, e.flow) not in heat_slots for e in p.effects) or any(
                isinstance(c.mass_flow, FlowRef) and c.mass_flow.process == p.id
                for c in graph.couplings)
            if needed:
                names.append(p.id)
    return names


def simulate(graph: ModelGraph, controls: dict[str, np.ndarray]) -> Trajectory:
    """Integrate the state equations for per-step control values (joules/kg).

    ``controls`` maps fuel entities (``heater__electricity``) or fuel-less
    process activities (``transfer``) to length-T arrays of per-step
    consumption in canonical units.  Missing entries default to zero.
    """
    T = graph.time_grid.horizon_steps
    dt = graph.time_grid.step_seconds
    wanted = _control_entities(graph)
    ctl = {}
    for name in controls:
        if name not in wanted:
            raise ModelError(f"unknown control entity {name!r}")
    for name in wanted:
        arr = np.asarray(controls.get(name, np.zeros(T)), dtype=float)
        if arr.shape[0] != T:
            raise ModelError(f"control {name!r} must have {T} values")
        ctl[name] = arr

    kinds = graph.quantity_kinds()
    energy_ids = [r.id for r in graph.reservoirs if r.quantity_kind == "energy_joule"]
    other_ids = [r.id for r in graph.reservoirs if r.quantity_kind != "energy_joule"]
    e_index = {rid: i for i, rid in enumerate(energy_ids)}

    levels = {r.id: np.zeros(T + 1) for r in graph.reservoirs}
    observers = {o.id: np.zeros(T + 1) for o in graph.observers}
    flows: dict[str, np.ndarray] = {}
    for r in graph.reservoirs:
        init = graph.initial_value(r)
        levels[r.id][0] = 0.0 if init is None else init

    # Delivered activity per process per step, from the controls.
    def delivered(pid: str, t: int) -> float:
        p = graph.process(pid)
        if p.fuel_inputs:
            return sum(f.efficiency * ctl[f"{pid}__{f.fuel}"][t]
                       for f in p.fuel_inputs)
        return ctl[pid][t] if pid in ctl else 0.0

    def observer_affine(oid: str, masses_next: dict[str, float]
                        ) -> tuple[float, dict[str, float]]:
        """Observer at t+1 as alpha + sum(beta_j * E_j(t+1))."""
        o = graph.observer(oid)
        if o.form == "linear_combination":
            alpha, beta = 0.0, {}
            for rid, c in o.operands:
                if rid in e_index:
                    beta[rid] = beta.get(rid, 0.0) + c
                else:
                    alpha += c * masses_next[rid]
            return alpha, beta
        (e_rid, e_coef), = o.energy_operands(kinds)
        den = sum(c * masses_next[rid] for rid, c in o.mass_operands(kinds))
        if den <= 0:
            raise ModelError(f"observer {oid}: nonpositive denominator {den}")
        return 0.0, {e_rid: e_coef / den}

    def observer_value(oid: str, t: int) -> float:
        alpha, beta = observer_affine(oid, {rid: levels[rid][t] for rid in other_ids})
        return alpha + sum(b * levels[rid][t] for rid, b in beta.items())

    # Initial observers.
    for o in graph.observers:
        observers[o.id][0] = observer_value(o.id, 0)

    # Pre-resolve coupled heat slots (labels backed by a coupling).
    slot_info = []
    heat_slots = {(c.heat_flow.process, c.heat_flow.flow) for c in graph.couplings}
    for p in graph.processes:
        labels = []
        for e in p.effects:
            if e.flow is not None and e.flow not in labels:
                labels.append(e.flow)
        for label in labels:
            if (p.id, label) not in heat_slots:
                continue
            c = graph.coupling_for(p.id, label)
            slot_info.append((p.id, label, c))
            flows[f"{p.id}__{label}"] = np.zeros(T)

    def mass_flow_value(c, t: int) -> float:
        if isinstance(c.mass_flow, SeriesRef):
            return float(graph.series(c.mass_flow.series)[t])
        pid = c.mass_flow.process
        value = delivered(pid, t)
        if c.mass_flow.flow is not None:
            eff = next(e for e in graph.process(pid).effects
                       if e.flow == c.mass_flow.flow)
            value *= eff.gain
        return value

    for t in range(T):
        # 1. masses advance (no observer dependence).
        for rid in other_ids:
            r = graph.reservoir(rid)
            nxt = levels[rid][t]
            for p in graph.processes:
                for e in p.effects:
                    if e.reservoir != rid:
                        continue
                    sign = 1.0 if e.direction == "inflow" else -1.0
                    nxt += sign * e.gain * delivered(p.id, t)
            if r.exogenous_inflow:
                nxt += float(graph.series(r.exogenous_inflow)[t])
            if r.exogenous_outflow:
                nxt -= float(graph.series(r.exogenous_outflow)[t])
            if r.decay is not None and r.decay.form == "affine_in_level":
                nxt -= _decay_value(graph, r, levels, observers, t, dt)
            levels[rid][t + 1] = nxt
        masses_next = {rid: levels[rid][t + 1] for rid in other_ids}

        # 2. energy levels: linear system over end-of-step coupled observers.
        n = len(energy_ids)
        A = np.eye(n)
        base = np.zeros(n)
        for j, rid in enumerate(energy_ids):
            r = graph.reservoir(rid)
            b = levels[rid][t]
            if r.exogenous_inflow:
                b += float(graph.series(r.exogenous_inflow)[t])
            if r.exogenous_outflow:
                b -= float(graph.series(r.exogenous_outflow)[t])
            if r.decay is not None:
                b -= _decay_value(graph, r, levels, observers, t, dt)
            for p in graph.processes:
                for e in p.effects:
                    if e.reservoir != rid:
                        continue
                    sign = 1.0 if e.direction == "inflow" else -1.0
                    if e.flow is None or (p.id, e.flow) not in heat_slots:
                        b += sign * e.gain * delivered(p.id, t)
                        continue
                    coupling = graph.coupling_for(p.id, e.flow)
                    mass_v = mass_flow_value(coupling, t)
                    temp = coupling.temperature
                    if isinstance(temp, FlowRef):
                        alpha, beta = observer_affine(temp.process, masses_next)
                        scale = sign * e.gain * coupling.heat_capacity * mass_v
                        b += scale * alpha
                        for erid, bcoef in beta.items():
                            A[j, e_index[erid]] -= scale * bcoef
                    else:
                        tval = (float(graph.series(temp.series)[t])
                                if isinstance(temp, SeriesRef) else float(temp))
                        b += sign * e.gain * coupling.heat_capacity * mass_v * tval
            base[j] = b
        if n:
            sol = np.linalg.solve(A, base)
            for j, rid in enumerate(energy_ids):
                levels[rid][t + 1] = float(sol[j])

        for o in graph.observers:
            observers[o.id][t + 1] = observer_value(o.id, t + 1)
        for pid, label, coupling in slot_info:
            mass_v = mass_flow_value(coupling, t)
            temp = coupling.temperature
            if isinstance(temp, FlowRef):
                tval = observers[temp.process][t + 1]
            elif isinstance(temp, SeriesRef):
                tval = float(graph.series(temp.series)[t])
            else:
                tval = float(temp)
            flows[f"{pid}__{label}"][t] = coupling.heat_capacity * mass_v * tval

    return Trajectory(levels, observers, flows, ctl)


def _decay_value(graph, r, levels, observers, t, dt) -> float:
    d = r.decay
    k = d.coefficient * dt
    if d.form == "affine_in_observer":
        driver = observers[d.observer][t]
    else:
        driver = levels[r.id][t]
    ref = 0.0
    if d.reference_signal is not None:
        if d.reference_signal in observers:
            ref = observers[d.reference_signal][t]
        else:
            ref = float(graph.series(d.reference_signal)[t])
    return k * (driver - ref)


def trajectory_assignment(graph: ModelGraph, program: MathProgram,
                          traj: Trajectory) -> dict[str, float]:
    """Map a trajectory onto every program variable (incl. discretization)."""
    kinds = graph.quantity_kinds()
    dens: dict[str, tuple] = {}
    for o in graph.observers:
        if o.form == "energy_over_heat_capacity_mass":
            dens[f"{o.id}__den"] = tuple(o.mass_operands(kinds))
    out: dict[str, float] = {}
    disc = program.meta.get("discretization")
    levels_of = {}
    if disc:
        levels_of = {f"{disc['target']}__lvl{i}": lv
                     for i, lv in enumerate(disc["levels"])}

    for v in program.variables:
        entity, t = program.origin.get(v.name, (None, None))
        if entity is None:
            entity, t_str = v.name.rsplit("__", 1)
            t = int(t_str)
        if entity in traj.levels:
            out[v.name] = float(traj.levels[entity][t])
        elif entity in traj.observers:
            out[v.name] = float(traj.observers[entity][t])
        elif entity in traj.controls:
            out[v.name] = float(traj.controls[entity][t])
        elif entity in traj.flows:
            out[v.name] = float(traj.flows[entity][t])
        elif entity in dens:
            out[v.name] = float(sum(c * traj.levels[rid][t]
                                    for rid, c in dens[entity]))
        elif entity in levels_of:
            mass = traj.levels[disc["target"]][t]
            lv = levels_of[entity]
            out[v.name] = 1.0 if abs(mass - lv) <= 1e-6 * max(1.0, lv) else 0.0
        elif disc and "__part" in entity:
            obs_entity, idx = entity.rsplit("__part", 1)
            lv = disc["levels"][int(idx)]
            mass = traj.levels[disc["target"]][t]
            if abs(mass - lv) <= 1e-6 * max(1.0, lv):
                out[v.name] = float(traj.observers[obs_entity][t])
            else:
                out[v.name] = 0.0
        else:
            raise ModelError(f"cannot place variable {v.name!r} from trajectory")
    return out


def controls_from_assignment(graph: ModelGraph, assignment: dict[str, float]
                             ) -> dict[str, np.ndarray]:
    """Extract per-step control arrays from a program assignment."""
    T = graph.time_grid.horizon_steps
    out = {}
    for entity in _control_entities(graph):
        arr = np.zeros(T)
        for t in range(T):
            arr[t] = assignment.get(f"{entity}__{t}", 0.0)
        out[entity] = arr
    return out
