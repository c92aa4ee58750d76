"""Price-driven scheduling: reference policy, optimal scheduling, rolling
horizon, and savings reporting.

The reference ("as soon as possible") policy pushes maximum admissible power
until the heating goal is met and then holds at the decay-offsetting power.
Optimal schedules come from compiling the graph (honouring a discretization
tag) and dispatching to the embedded solver; bilinear programs get a
simulate-and-repair incumbent heuristic so the search starts from genuine
feasible schedules.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .compiler import CompileError, DiscretizationSpec, compile_model, discretize, strengthen
from .model import (
    MWH_J,
    ModelError,
    ModelGraph,
    ObserverSpec,
    ReservoirSpec,
    TerminalCondition,
    TimeGrid,
)
from .program import MathProgram
from .sim import Trajectory, controls_from_assignment, simulate, trajectory_assignment
from .solver import SolverConfig, check_solution, solve
from . import solver as solver_mod


class SchedulerError(ValueError):
    pass


@dataclass(frozen=True)
class PriceScenario:
    """Per-step electricity prices in currency per MWh; negatives allowed."""

    values: tuple[float, ...]
    label: str = ""

    def __len__(self):
        return len(self.values)

    def slice(self, start: int, n: int) -> "PriceScenario":
        return PriceScenario(self.values[start:start + n], self.label)

    @classmethod
    def from_array(cls, values, label: str = "") -> "PriceScenario":
        return cls(tuple(float(v) for v in np.asarray(values, dtype=float)), label)


@dataclass(frozen=True)
class RollingConfig:
    window: int = 8
    advance: int = 1
    total_horizon: int = 8

    def __post_init__(self):
        if not (1 <= self.advance <= self.window <= self.total_horizon):
            raise SchedulerError(
                f"need 1 <= advance ({self.advance}) <= window ({self.window})"
                f" <= total_horizon ({self.total_horizon})")


@dataclass
class RollingStats:
    windows: int = 0
    total_nodes: int = 0
    total_wall: float = 0.0

    @property
    def mean_nodes(self) -> float:
        return self.total_nodes / self.windows if self.windows else 0.0

    @property
    def mean_wall(self) -> float:
        return self.total_wall / self.windows if self.windows else 0.0


@dataclass
class Schedule:
    horizon_steps: int
    prices: np.ndarray                      # currency/MWh, per step
    consumption: dict[str, np.ndarray]      # fuel -> MWh per step (aggregated)
    by_process: dict[str, np.ndarray]       # "process.fuel" -> MWh per step
    levels: dict[str, np.ndarray]           # reservoir -> T+1 values
    observers: dict[str, np.ndarray]        # observer -> T+1 values
    total_cost: float
    feasible: bool
    objective: float = math.nan
    solver_status: str = ""
    gap: float = math.nan
    node_count: int = 0
    infeasible_window: int | None = None
    stats: RollingStats | None = None

    def step_cost(self, t: int) -> float:
        return math.fsum(self.prices[t] * arr[t] for arr in self.consumption.values())

    def total_consumption(self) -> np.ndarray:
        out = np.zeros(self.horizon_steps)
        for arr in self.consumption.values():
            out += arr
        return out


def _install_prices(graph: ModelGraph, prices: PriceScenario) -> ModelGraph:
    T = graph.time_grid.horizon_steps
    if len(prices) < T:
        raise SchedulerError(f"price scenario has {len(prices)} steps, need {T}")
    arr = np.asarray(prices.values[:T], dtype=float)
    series = dict(graph.exogenous_series)
    for p in graph.processes:
        for f in p.fuel_inputs:
            series[f.price_series] = arr
    return ModelGraph(graph.time_grid, list(graph.reservoirs), list(graph.observers),
                      list(graph.processes), list(graph.couplings), series,
                      graph.discretize)


def _schedule_from_trajectory(graph: ModelGraph, traj: Trajectory,
                              prices: np.ndarray, feasible: bool,
                              **solver_fields) -> Schedule:
    T = graph.time_grid.horizon_steps
    by_process: dict[str, np.ndarray] = {}
    consumption: dict[str, np.ndarray] = {}
    for p in graph.processes:
        for f in p.fuel_inputs:
            arr = traj.controls.get(f"{p.id}__{f.fuel}", np.zeros(T)) / MWH_J
            by_process[f"{p.id}.{f.fuel}"] = arr
            consumption[f.fuel] = consumption.get(f.fuel, np.zeros(T)) + arr
    cost = math.fsum(float(prices[t]) * float(arr[t])
                     for arr in consumption.values() for t in range(T))
    return Schedule(T, np.asarray(prices, dtype=float), consumption, by_process,
                    {k: v.copy() for k, v in traj.levels.items()},
                    {k: v.copy() for k, v in traj.observers.items()},
                    cost, feasible, **solver_fields)


# ---------------------------------------------------------------------------
# Incumbent heuristic: simulate the relaxation's controls, repair bands
# ---------------------------------------------------------------------------


def _band_knobs(graph: ModelGraph):
    """For each bounded observer: fuel knobs that push its energy up or down.

    Only ramp-free fueled processes acting directly (unlabelled effect) on
    the observer's energy reservoir qualify; a knob is (fuel_entity,
    joules-per-joule-of-fuel, per-step bounds).
    """
    kinds = graph.quantity_kinds()
    dt = graph.time_grid.step_seconds
    knobs = []
    for o in graph.observers:
        if o.bounds is None:
            continue
        if o.form == "energy_over_heat_capacity_mass":
            (e_rid, _), = o.energy_operands(kinds)
        elif len(o.operands) == 1:
            e_rid = o.operands[0][0]
        else:
            continue
        up, down = [], []
        for p in graph.processes:
            if not p.fuel_inputs or p.ramp_ratio_lower or p.ramp_ratio_upper:
                continue
            f = p.fuel_inputs[0]
            entity = f"{p.id}__{f.fuel}"
            bounds = (p.power_lower * dt, p.power_upper * dt)
            for e in p.effects:
                if e.reservoir != e_rid or e.flow is not None:
                    continue
                knob = (entity, e.gain * f.efficiency, bounds)
                (up if e.direction == "inflow" else down).append(knob)
        knobs.append((o, e_rid, up, down))
    return knobs


def _repair_controls(graph: ModelGraph, controls: dict[str, np.ndarray],
                     knobs, max_rounds: int | None = None):
    """Adjust fuel knobs step by step until bounded observers stay in band."""
    T = graph.time_grid.horizon_steps
    kinds = graph.quantity_kinds()
    ctl = {k: v.copy() for k, v in controls.items()}
    if max_rounds is None:
        max_rounds = 4 * T
    for _ in range(max_rounds):
        try:
            traj = simulate(graph, ctl)
        except ModelError:
            return None, None
        worst = None
        for o, e_rid, up, down in knobs:
            lo, hi = o.bounds
            vals = traj.observers[o.id]
            for t in range(1, T + 1):
                v = vals[t]
                if hi is not None and v > hi + 1e-9:
                    worst = (t, o, e_rid, v - hi, down, up)
                    break
                if lo is not None and v < lo - 1e-9:
                    worst = (t, o, e_rid, v - lo, down, up)
                    break
            if worst:
                break
        if worst is None:
            return ctl, traj
        t, o, e_rid, _excess, down, up = worst
        target = o.target
        if target is None:
            lo, hi = o.bounds
            target = ((lo if lo is not None else hi) +
                      (hi if hi is not None else lo)) / 2.0
        den = _observer_denominator(graph, o, kinds, traj, t)
        delta_e = (traj.observers[o.id][t] - target) * den
        # Too hot: push a cooling knob up, or pull a heating knob down.
        if delta_e > 0:
            choices = [(down, +1.0), (up, -1.0)]
        else:
            choices = [(up, +1.0), (down, -1.0)]
        moved = False
        for knob_list, direction in choices:
            if not knob_list:
                continue
            entity, per_fuel, (blo, bhi) = knob_list[0]
            if entity not in ctl:
                ctl[entity] = np.zeros(T)
            new = ctl[entity][t - 1] + direction * abs(delta_e) / per_fuel
            new = min(max(new, blo), bhi)
            if abs(new - ctl[entity][t - 1]) > 1e-12 * (1.0 + abs(new)):
                ctl[entity][t - 1] = new
                moved = True
                break
        if not moved:
            return None, None  # all knobs saturated
    return None, None


def _observer_denominator(graph, o: ObserverSpec, kinds, traj, t) -> float:
    if o.form == "energy_over_heat_capacity_mass":
        return sum(c * traj.levels[rid][t] for rid, c in o.mass_operands(kinds))
    (rid, coef), = o.operands
    return 1.0 / coef


def make_incumbent_heuristic(graph: ModelGraph, program: MathProgram,
                             feas_tol: float = 1e-7):
    """Relaxation point -> feasible assignment via simulate-and-repair."""
    knobs = _band_knobs(graph)

    def heuristic(assignment: dict[str, float]):
        try:
            raw = controls_from_assignment(graph, assignment)
        except ModelError:
            return None
        ctl, traj = _repair_controls(graph, raw, knobs)
        if ctl is None:
            return None
        try:
            candidate = trajectory_assignment(graph, program, traj)
        except ModelError:
            return None
        if check_solution(program, candidate, feas_tol).ok:
            return candidate
        return None

    return heuristic


# ---------------------------------------------------------------------------
# Reference policy: heat as soon as possible, then hold
# ---------------------------------------------------------------------------


def _find_heating_goal(graph: ModelGraph):
    """Locate the heating process and its goal.

    Returns ("terminal", reservoir, process) when an energy reservoir has a
    terminal condition, else ("observer", observer, process) when a bounded
    observer carries a target.
    """
    kinds = graph.quantity_kinds()
    for r in graph.reservoirs:
        if r.terminal_level is not None and r.quantity_kind == "energy_joule":
            proc = _heater_for(graph, r.id)
            if proc is not None:
                return "terminal", r, proc
    for o in graph.observers:
        if o.target is None:
            continue
        if o.form == "energy_over_heat_capacity_mass":
            (e_rid, _), = o.energy_operands(kinds)
        elif len(o.operands) == 1:
            e_rid = o.operands[0][0]
        else:
            continue
        proc = _heater_for(graph, e_rid)
        if proc is not None:
            return "observer", o, proc
    raise SchedulerError(
        "no heating goal found: need a terminal energy condition or an "
        "observer with a target, plus a fueled inflow process")


def _heater_for(graph: ModelGraph, reservoir_id: str):
    best = None
    for p in graph.processes:
        if not p.fuel_inputs:
            continue
        for e in p.effects:
            if e.reservoir == reservoir_id and e.direction == "inflow" and e.flow is None:
                gain = e.gain * p.fuel_inputs[0].efficiency
                if best is None or gain > best[1]:
                    best = (p, gain)
    return None if best is None else best[0]


def _ramp_cone_sums(c: float, k: int, lo: float, hi: float,
                    rlo: float | None, rhi: float | None) -> tuple[float, float]:
    """Min and max total consumption over the next k steps after value c."""
    dn = up = 0.0
    cd = cu = c
    for _ in range(k):
        cd = max(lo, rlo * cd) if rlo is not None else lo
        cu = min(hi, rhi * cu) if rhi is not None else hi
        dn += cd
        up += cu
    return dn, up


def baseline_asap(graph: ModelGraph, prices: PriceScenario) -> Schedule:
    """Reference policy: maximum admissible power until the goal is met,
    then the minimal holding power offsetting decay."""
    g = _install_prices(graph, prices)
    T = g.time_grid.horizon_steps
    dt = g.time_grid.step_seconds
    kind, goal, proc = _find_heating_goal(g)
    fuel = proc.fuel_inputs[0]
    entity = f"{proc.id}__{fuel.fuel}"
    gain = next(e.gain for e in proc.effects
                if e.direction == "inflow" and e.flow is None) * fuel.efficiency
    lo, hi = proc.power_lower * dt, proc.power_upper * dt
    rlo, rhi = proc.ramp_ratio_lower, proc.ramp_ratio_upper

    controls = {entity: np.zeros(T)}
    # Charge material as fast as possible when a mass terminal exists.
    for p in g.processes:
        if p.fuel_inputs or not any(
                e.direction == "inflow" and e.flow is None and
                g.reservoir(e.reservoir).quantity_kind == "mass_kg"
                for e in p.effects):
            continue
        r = next(g.reservoir(e.reservoir) for e in p.effects
                 if e.direction == "inflow" and e.flow is None)
        if r.terminal_level is None:
            continue
        need = r.terminal_level.value - (g.initial_value(r) or 0.0)
        arr = np.zeros(T)
        cap = p.power_upper * dt
        for t in range(T):
            arr[t] = min(cap, max(need, 0.0))
            need -= arr[t]
        controls[p.id] = arr

    ok = True
    if kind == "terminal":
        ok = _asap_terminal(g, goal, proc, entity, gain, (lo, hi), (rlo, rhi),
                            controls)
    else:
        ok = _asap_observer(g, goal, proc, entity, gain, (lo, hi), (rlo, rhi),
                            controls)

    traj = simulate(g, controls)
    feasible = ok and _trajectory_feasible(g, traj)
    arr = np.asarray(prices.values[:T], dtype=float)
    return _schedule_from_trajectory(g, traj, arr, feasible,
                                     solver_status="baseline")


def _asap_terminal(g, res: ReservoirSpec, proc, entity, gain, bounds, ramps,
                   controls) -> bool:
    T = g.time_grid.horizon_steps
    lo, hi = bounds
    rlo, rhi = ramps
    target = res.terminal_level.value
    want_equal = res.terminal_level.sense == "="
    losses = (g.series(res.exogenous_outflow) if res.exogenous_outflow
              else np.zeros(T))
    e_val = g.initial_value(res) or 0.0
    prev = None
    arr = controls[entity]
    for t in range(T):
        step_lo = lo if prev is None or rlo is None else max(lo, rlo * prev)
        step_hi = hi if prev is None or rhi is None else min(hi, rhi * prev)
        if step_lo > step_hi + 1e-9:
            return False
        remaining = target - e_val
        k = T - 1 - t
        fut_losses = float(losses[t + 1:].sum())

        def after(c):
            return remaining - gain * c + float(losses[t])

        def admissible(c):
            dn, up = _ramp_cone_sums(c, k, lo, hi, rlo, rhi)
            r_after = after(c)
            if want_equal and r_after < gain * dn - fut_losses - 1e-6:
                return False
            return True

        # Largest admissible consumption; overshoot only matters for "=".
        a, b = step_lo, step_hi
        if admissible(b):
            c = b
        elif not admissible(a):
            return False
        else:
            for _ in range(80):
                mid = 0.5 * (a + b)
                if admissible(mid):
                    a = mid
                else:
                    b = mid
            c = a
        # Do not overshoot the target within this very step.
        if want_equal:
            c = min(c, max((remaining + float(losses[t])) / gain, step_lo))
        arr[t] = c
        e_val += gain * c - float(losses[t])
        prev = c
    if want_equal:
        return abs(e_val - target) <= 1e-6 * max(1.0, abs(target))
    return e_val >= target - 1e-6 * max(1.0, abs(target))


def _asap_observer(g, obs: ObserverSpec, proc, entity, gain, bounds, ramps,
                   controls) -> bool:
    T = g.time_grid.horizon_steps
    lo, hi = bounds
    rlo, rhi = ramps
    target = obs.target
    cap_hi = obs.bounds[1] if obs.bounds else None
    aim = target if cap_hi is None else min(target, cap_hi)
    prev = None
    arr = controls[entity]
    for t in range(T):
        step_lo = lo if prev is None or rlo is None else max(lo, rlo * prev)
        step_hi = hi if prev is None or rhi is None else min(hi, rhi * prev)
        if step_lo > step_hi + 1e-9:
            return False

        def observed(c):
            arr[t] = c
            arr[t + 1:] = 0.0
            traj = simulate(g, controls)
            return traj.observers[obs.id][t + 1]

        t_hi = observed(step_hi)
        if t_hi <= aim + 1e-9:
            c = step_hi  # full power still below the goal
        else:
            a, b = step_lo, step_hi
            if observed(step_lo) >= aim:
                c = step_lo
            else:
                for _ in range(60):
                    mid = 0.5 * (a + b)
                    if observed(mid) < aim:
                        a = mid
                    else:
                        b = mid
                c = b
        arr[t] = c
        prev = c
    traj = simulate(g, controls)
    return traj.observers[obs.id][T] >= aim - 1e-6 * max(1.0, abs(aim))


def _trajectory_feasible(g: ModelGraph, traj: Trajectory, tol=1e-6) -> bool:
    try:
        program = compile_model(g)
        assignment = trajectory_assignment(g, program, traj)
    except (CompileError, ModelError):
        return False
    return check_solution(program, assignment, tol).ok


# ---------------------------------------------------------------------------
# Optimal scheduling
# ---------------------------------------------------------------------------


def optimize_schedule(graph: ModelGraph, prices: PriceScenario,
                      cfg: SolverConfig | None = None,
                      apply_strengthening: bool = False) -> Schedule:
    """Cost-optimal schedule from the compiled (possibly discretized) model."""
    cfg = cfg or SolverConfig()
    g = _install_prices(graph, prices)
    program = compile_model(g)
    if g.discretize is not None:
        spec = DiscretizationSpec.from_tag(
            g.discretize,
            clique_strengthening=apply_strengthening,
            lower_bound_strengthening=apply_strengthening)
        program = discretize(program, spec)
        if apply_strengthening:
            program = strengthen(program, spec)
    heuristic = (make_incumbent_heuristic(g, program, cfg.feasibility_tolerance)
                 if program.bilinear_terms else None)
    sol = solve(program, cfg, incumbent_heuristic=heuristic)
    T = g.time_grid.horizon_steps
    arr = np.asarray(prices.values[:T], dtype=float)
    if not sol.ok and not sol.assignment:
        empty = Trajectory({r.id: np.zeros(T + 1) for r in g.reservoirs},
                           {o.id: np.zeros(T + 1) for o in g.observers}, {}, {})
        sched = _schedule_from_trajectory(g, empty, arr, False,
                                          solver_status=sol.status,
                                          objective=sol.objective,
                                          gap=sol.gap, node_count=sol.node_count)
        return sched
    ctl = controls_from_assignment(g, sol.assignment)
    traj = simulate(g, ctl)
    sched = _schedule_from_trajectory(
        g, traj, arr, True, solver_status=sol.status, objective=sol.objective,
        gap=sol.gap, node_count=sol.node_count)
    return sched


# ---------------------------------------------------------------------------
# Rolling horizon
# ---------------------------------------------------------------------------


def _window_graph(graph: ModelGraph, start: int, width: int,
                  initial: dict[str, float] | None, is_final: bool) -> ModelGraph:
    """Slice the graph's series to [start, start+width) and re-anchor."""
    grid = TimeGrid(width, graph.time_grid.step_seconds)
    T = graph.time_grid.horizon_steps
    series = {}
    for sid, values in graph.exogenous_series.items():
        arr = np.asarray(values, dtype=float)
        if arr.shape[0] == T + 1:
            series[sid] = arr[start:start + width + 1]
        else:
            series[sid] = arr[start:start + width]
    reservoirs = []
    for r in graph.reservoirs:
        init = r.initial_level if initial is None else initial.get(r.id, r.initial_level)
        terminal = r.terminal_level if is_final else None
        reservoirs.append(replace(r, initial_level=init, terminal_level=terminal))
    return ModelGraph(grid, reservoirs, list(graph.observers),
                      list(graph.processes), list(graph.couplings), series,
                      graph.discretize)


def rolling_horizon(graph: ModelGraph, scenario: PriceScenario,
                    rc: RollingConfig, cfg: SolverConfig | None = None) -> Schedule:
    """Repeatedly solve window-sized programs, committing `advance` steps."""
    if len(scenario) < rc.total_horizon:
        raise SchedulerError("price scenario shorter than the total horizon")
    if graph.time_grid.horizon_steps != rc.total_horizon:
        raise SchedulerError("graph horizon must equal rc.total_horizon")
    cfg = cfg or SolverConfig()
    stats = RollingStats()
    total = rc.total_horizon
    committed = 0
    state: dict[str, float] | None = None
    pieces: list[Schedule] = []
    window_index = 0
    while committed < total:
        width = min(rc.window, total - committed)
        is_final = committed + width >= total
        wg = _window_graph(graph, committed, width, state, is_final)
        wp = scenario.slice(committed, width)
        sched = optimize_schedule(wg, wp, cfg)
        stats.windows += 1
        stats.total_nodes += sched.node_count
        if not sched.feasible:
            partial = _concat_schedules(graph, pieces, scenario, committed)
            partial.feasible = False
            partial.infeasible_window = window_index
            partial.stats = stats
            return partial
        take = width if is_final else min(rc.advance, width)
        pieces.append(_truncate_schedule(sched, take))
        # Clamp solver-tolerance noise back into the hard level bounds.
        state = {}
        for r in graph.reservoirs:
            v = float(sched.levels[r.id][take])
            state[r.id] = min(max(v, r.level_lower), r.level_upper)
        committed += take
        window_index += 1
    out = _concat_schedules(graph, pieces, scenario, committed)
    out.stats = stats
    return out


def _truncate_schedule(s: Schedule, n: int) -> Schedule:
    return Schedule(
        n, s.prices[:n],
        {k: v[:n] for k, v in s.consumption.items()},
        {k: v[:n] for k, v in s.by_process.items()},
        {k: v[:n + 1] for k, v in s.levels.items()},
        {k: v[:n + 1] for k, v in s.observers.items()},
        math.fsum(float(s.prices[t]) * float(arr[t])
                  for arr in s.consumption.values() for t in range(n)),
        s.feasible, s.objective, s.solver_status, s.gap, s.node_count)


def _concat_schedules(graph: ModelGraph, pieces: list[Schedule],
                      scenario: PriceScenario, committed: int) -> Schedule:
    T = committed
    prices = np.asarray(scenario.values[:T], dtype=float)
    fuels = sorted({k for p in pieces for k in p.consumption})
    by_keys = sorted({k for p in pieces for k in p.by_process})
    consumption = {k: np.zeros(T) for k in fuels}
    by_process = {k: np.zeros(T) for k in by_keys}
    levels = {r.id: np.zeros(T + 1) for r in graph.reservoirs}
    observers = {o.id: np.zeros(T + 1) for o in graph.observers}
    pos = 0
    for p in pieces:
        n = p.horizon_steps
        for k in fuels:
            if k in p.consumption:
                consumption[k][pos:pos + n] = p.consumption[k]
        for k in by_keys:
            if k in p.by_process:
                by_process[k][pos:pos + n] = p.by_process[k]
        for k, vals in p.levels.items():
            levels[k][pos:pos + n + 1] = vals
        for k, vals in p.observers.items():
            observers[k][pos:pos + n + 1] = vals
        pos += n
    cost = math.fsum(float(prices[t]) * float(arr[t])
                     for arr in consumption.values() for t in range(T))
    node_count = sum(p.node_count for p in pieces)
    return Schedule(T, prices, consumption, by_process, levels, observers,
                    cost, True, solver_status="rolling", node_count=node_count)


# ---------------------------------------------------------------------------
# Savings report
# ---------------------------------------------------------------------------


@dataclass
class SavingsReport:
    reference_cost: float
    optimized_cost: float
    absolute_savings: float
    percent_savings: float
    reference_peak_step: int
    optimized_peak_step: int
    per_step_delta_mwh: list[float]

    def to_dict(self) -> dict:
        return {
            "reference_cost": self.reference_cost,
            "optimized_cost": self.optimized_cost,
            "absolute_savings": self.absolute_savings,
            "percent_savings": self.percent_savings,
            "reference_peak_step": self.reference_peak_step,
            "optimized_peak_step": self.optimized_peak_step,
            "per_step_delta_mwh": self.per_step_delta_mwh,
        }


def savings_report(reference: Schedule, optimized: Schedule) -> SavingsReport:
    if reference.horizon_steps != optimized.horizon_steps:
        raise SchedulerError("schedules cover different horizons")
    if not np.array_equal(reference.prices, optimized.prices):
        raise SchedulerError("schedules priced under different scenarios")
    ref_c, opt_c = reference.total_cost, optimized.total_cost
    absolute = ref_c - opt_c
    percent = 100.0 * absolute / ref_c if ref_c != 0 else 0.0
    ref_total = reference.total_consumption()
    opt_total = optimized.total_consumption()
    return SavingsReport(
        reference_cost=ref_c,
        optimized_cost=opt_c,
        absolute_savings=absolute,
        percent_savings=percent,
        reference_peak_step=int(np.argmax(ref_total)),
        optimized_peak_step=int(np.argmax(opt_total)),
        per_step_delta_mwh=[float(x) for x in (opt_total - ref_total)],
    )


# ---------------------------------------------------------------------------
# CSV formats
# ---------------------------------------------------------------------------


def read_price_csv(path_or_text) -> PriceScenario:
    """CSV with header `step,price_eur_per_mwh`."""
    text = path_or_text
    if "\n" not in str(path_or_text):
        with open(path_or_text) as fh:
            text = fh.read()
    rows = list(csv.DictReader(io.StringIO(str(text))))
    if not rows or "price_eur_per_mwh" not in rows[0]:
        raise SchedulerError("price CSV needs columns step,price_eur_per_mwh")
    ordered = sorted(rows, key=lambda r: int(r["step"]))
    return PriceScenario(tuple(float(r["price_eur_per_mwh"]) for r in ordered))


def write_price_csv(prices: PriceScenario, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "price_eur_per_mwh"])
        for t, v in enumerate(prices.values):
            w.writerow([t, repr(float(v))])


def schedule_to_csv(s: Schedule) -> str:
    """One row per (step, fuel); level/observer columns show the end state."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    level_cols = sorted(s.levels)
    obs_cols = sorted(s.observers)
    header = (["step", "fuel", "consumption_mwh"]
              + [f"level_{k}" for k in level_cols]
              + [f"observer_{k}" for k in obs_cols]
              + ["cost_eur"])
    w.writerow(header)
    for t in range(s.horizon_steps):
        for fuel in sorted(s.consumption):
            c = float(s.consumption[fuel][t])
            row = [t, fuel, repr(c)]
            row += [repr(float(s.levels[k][t + 1])) for k in level_cols]
            row += [repr(float(s.observers[k][t + 1])) for k in obs_cols]
            row.append(repr(float(s.prices[t]) * c))
            w.writerow(row)
    return buf.getvalue()
