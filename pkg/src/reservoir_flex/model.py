"""Reservoir-diagram intermediate representation.

A model is a graph of storage *reservoirs* (mass or energy levels stepping
forward as prior level + inflows - outflows - decay), *observers* (derived
quantities such as temperature, carrying operating bounds), external
*processes* (the only consumers of priced fuels, pushing flows into or out
of reservoirs), and *flow couplings* (tying a heat flow to a mass flow
through a temperature and a heat capacity).

Conventions: state variables are indexed 0..T, flows and exogenous series
0..T-1 (series may carry T+1 values when they anchor states).  Canonical
units are kg, J, s and currency; prices are given per MWh and converted at
the objective.  Validation returns violations as data rather than raising:
an empty report marks a well-formed graph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

QUANTITY_KINDS = ("mass_kg", "energy_joule", "abstract_unit")
DECAY_FORMS = ("affine_in_observer", "affine_in_level")
OBSERVER_FORMS = ("linear_combination", "energy_over_heat_capacity_mass")
BOUND_ENCODINGS = ("direct", "cross_multiplied")
DIRECTIONS = ("inflow", "outflow")
TERMINAL_SENSES = ("=", ">=")

MWH_J = 3.6e9  # joules per megawatt-hour


class ModelError(ValueError):
    """Raised for hard usage errors (unknown ids, bad step index)."""


# ---------------------------------------------------------------------------
# Specs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TimeGrid:
    horizon_steps: int
    step_seconds: float


@dataclass(frozen=True)
class InitialExpression:
    """Initial level as scale * product of exogenous values.

    Restricted shape keeps validation decidable: each factor is one value
    ``series[index]`` of a declared exogenous series.
    """

    scale: float
    series_factors: tuple[tuple[str, int], ...] = ()

    def evaluate(self, series: dict[str, np.ndarray]) -> float:
        value = self.scale
        for sid, idx in self.series_factors:
            value *= float(series[sid][idx])
        return value


@dataclass(frozen=True)
class DecayLaw:
    """Leak term of a decaying reservoir.

    ``affine_in_observer``: decay_t = coefficient * (observer_t - reference_t)
    ``affine_in_level``:    decay_t = coefficient * (level_t - reference_t)

    The coefficient is a per-second rate (W/K for thermal losses); the
    compiler multiplies by the step length.  ``reference_signal`` names an
    exogenous series or another observer; omitted means reference 0.
    """

    form: str
    coefficient: float
    observer: str | None = None
    reference_signal: str | None = None


@dataclass(frozen=True)
class TerminalCondition:
    value: float
    sense: str = "="  # "=" or ">="


@dataclass(frozen=True)
class ReservoirSpec:
    id: str
    quantity_kind: str
    level_lower: float
    level_upper: float
    initial_level: float | InitialExpression | None = None
    decay: DecayLaw | None = None
    exogenous_inflow: str | None = None   # series id, per-step amounts
    exogenous_outflow: str | None = None
    terminal_level: TerminalCondition | None = None


@dataclass(frozen=True)
class ObserverSpec:
    id: str
    form: str
    operands: tuple[tuple[str, float], ...]
    bounds: tuple[float | None, float | None] | None = None
    bound_encoding: str = "direct"
    target: float | None = None  # operational setpoint used by the baseline policy

    def energy_operands(self, kinds: dict[str, str]) -> list[tuple[str, float]]:
        return [(r, c) for r, c in self.operands if kinds.get(r) == "energy_joule"]

    def mass_operands(self, kinds: dict[str, str]) -> list[tuple[str, float]]:
        return [(r, c) for r, c in self.operands if kinds.get(r) == "mass_kg"]


@dataclass(frozen=True)
class Effect:
    reservoir: str
    direction: str  # "inflow" | "outflow"
    gain: float
    flow: str | None = None  # label shared by effects riding the same flow


@dataclass(frozen=True)
class FuelInput:
    fuel: str
    price_series: str
    efficiency: float  # efficiency in (0,1] or COP > 0


@dataclass(frozen=True)
class ProcessSpec:
    """External process: the only place fuels are consumed.

    The per-step activity (what the process delivers) is the sum of
    efficiency-weighted fuel consumptions, or a free flow variable for
    fuel-less transfer processes.  Power bounds and ramp ratios apply to the
    total fuel consumption (the activity itself when fuel-less), stated as
    per-second rates.
    """

    id: str
    effects: tuple[Effect, ...]
    fuel_inputs: tuple[FuelInput, ...] = ()
    power_lower: float = 0.0
    power_upper: float = float("inf")
    ramp_ratio_lower: float | None = None
    ramp_ratio_upper: float | None = None


@dataclass(frozen=True)
class FlowRef:
    """Reference to a process flow slot (label) or the process activity."""

    process: str
    flow: str | None = None


@dataclass(frozen=True)
class SeriesRef:
    series: str


@dataclass(frozen=True)
class FlowCoupling:
    """heat_flow = heat_capacity * temperature * mass_flow, per step.

    The temperature may be an observer (evaluated at the end state of the
    flow step), an exogenous series (at the flow index), or a constant.
    """

    heat_flow: FlowRef
    mass_flow: FlowRef | SeriesRef
    temperature: FlowRef | SeriesRef | float  # FlowRef.process holds observer id
    heat_capacity: float


@dataclass(frozen=True)
class ObserverRef:
    observer: str


@dataclass(frozen=True)
class DiscretizationTag:
    """Marks a mass reservoir for the compiler's discretization pass."""

    reservoir: str
    levels: tuple[float, ...]
    heat_capacity: float


@dataclass
class ModelGraph:
    time_grid: TimeGrid
    reservoirs: list[ReservoirSpec] = field(default_factory=list)
    observers: list[ObserverSpec] = field(default_factory=list)
    processes: list[ProcessSpec] = field(default_factory=list)
    couplings: list[FlowCoupling] = field(default_factory=list)
    exogenous_series: dict[str, np.ndarray] = field(default_factory=dict)
    discretize: DiscretizationTag | None = None

    # -- lookups ----------------------------------------------------------

    def reservoir(self, rid: str) -> ReservoirSpec:
        for r in self.reservoirs:
            if r.id == rid:
                return r
        raise ModelError(f"unknown reservoir {rid!r}")

    def observer(self, oid: str) -> ObserverSpec:
        for o in self.observers:
            if o.id == oid:
                return o
        raise ModelError(f"unknown observer {oid!r}")

    def process(self, pid: str) -> ProcessSpec:
        for p in self.processes:
            if p.id == pid:
                return p
        raise ModelError(f"unknown process {pid!r}")

    def series(self, sid: str) -> np.ndarray:
        try:
            return self.exogenous_series[sid]
        except KeyError:
            raise ModelError(f"unknown series {sid!r}") from None

    def quantity_kinds(self) -> dict[str, str]:
        return {r.id: r.quantity_kind for r in self.reservoirs}

    def coupling_for(self, process: str, flow: str) -> FlowCoupling | None:
        for c in self.couplings:
            if c.heat_flow.process == process and c.heat_flow.flow == flow:
                return c
        return None

    def initial_value(self, res: ReservoirSpec) -> float | None:
        if res.initial_level is None:
            return None
        if isinstance(res.initial_level, InitialExpression):
            return res.initial_level.evaluate(self.exogenous_series)
        return float(res.initial_level)

    def with_initials(self, levels: dict[str, float]) -> "ModelGraph":
        """Copy of the graph re-anchored at the given initial levels."""
        new_res = [
            replace(r, initial_level=levels.get(r.id, r.initial_level))
            for r in self.reservoirs
        ]
        return ModelGraph(self.time_grid, new_res, list(self.observers),
                          list(self.processes), list(self.couplings),
                          dict(self.exogenous_series), self.discretize)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelViolation:
    code: str
    entity: str
    message: str

    def __str__(self):
        return f"[{self.code}] {self.entity}: {self.message}"


@dataclass
class ValidationReport:
    violations: list[ModelViolation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        return "valid" if self.ok else "\n".join(str(v) for v in self.violations)


def validate(graph: ModelGraph) -> ValidationReport:
    """Structural validation; violations are data, not failures."""
    v: list[ModelViolation] = []
    T = graph.time_grid.horizon_steps

    def bad(code, entity, message):
        v.append(ModelViolation(code, entity, message))

    if T < 1:
        bad("time", "time_grid", f"horizon_steps must be >= 1, got {T}")
    if graph.time_grid.step_seconds <= 0:
        bad("time", "time_grid", "step_seconds must be > 0")

    ids: dict[str, str] = {}
    for kind, items in (("reservoir", graph.reservoirs),
                        ("observer", graph.observers),
                        ("process", graph.processes)):
        for item in items:
            if item.id in ids:
                bad("duplicate_id", item.id, f"already used by a {ids[item.id]}")
            ids[item.id] = kind

    def check_series(sid: str, entity: str, state_anchored_ok: bool = True):
        if sid not in graph.exogenous_series:
            bad("dangling_reference", entity, f"series {sid!r} not declared")
            return
        n = len(graph.exogenous_series[sid])
        if n != T and not (state_anchored_ok and n == T + 1):
            bad("series_length", entity,
                f"series {sid!r} has {n} values, expected {T} (or {T + 1})")

    res_ids = {r.id for r in graph.reservoirs}
    obs_ids = {o.id for o in graph.observers}
    kinds = graph.quantity_kinds()

    for r in graph.reservoirs:
        if r.quantity_kind not in QUANTITY_KINDS:
            bad("unit_mismatch", r.id, f"unknown quantity kind {r.quantity_kind!r}")
        if r.level_lower > r.level_upper:
            bad("bound_inversion", r.id,
                f"level_lower {r.level_lower} > level_upper {r.level_upper}")
        init = r.initial_level
        if isinstance(init, InitialExpression):
            for sid, idx in init.series_factors:
                check_series(sid, r.id)
                if sid in graph.exogenous_series and not (
                        0 <= idx < len(graph.exogenous_series[sid])):
                    bad("series_length", r.id,
                        f"initial expression index {idx} out of range for {sid!r}")
        elif init is not None:
            if not (r.level_lower <= init <= r.level_upper):
                bad("bound_inversion", r.id,
                    f"initial level {init} outside [{r.level_lower}, {r.level_upper}]")
        if r.decay is not None:
            d = r.decay
            if d.form not in DECAY_FORMS:
                bad("unit_mismatch", r.id, f"unknown decay form {d.form!r}")
            if d.coefficient < 0:
                bad("bound_inversion", r.id,
                    f"decay coefficient must be >= 0, got {d.coefficient}")
            if d.form == "affine_in_observer":
                if d.observer is None:
                    bad("dangling_reference", r.id, "decay law names no observer")
                elif d.observer not in obs_ids:
                    bad("dangling_reference", r.id,
                        f"decay law references missing observer {d.observer!r}")
            if d.reference_signal is not None:
                if d.reference_signal in obs_ids:
                    pass
                else:
                    check_series(d.reference_signal, r.id)
        for sid in (r.exogenous_inflow, r.exogenous_outflow):
            if sid is not None:
                check_series(sid, r.id, state_anchored_ok=False)
        if r.terminal_level is not None and r.terminal_level.sense not in TERMINAL_SENSES:
            bad("unit_mismatch", r.id,
                f"terminal sense must be one of {TERMINAL_SENSES}")

    for o in graph.observers:
        if o.form not in OBSERVER_FORMS:
            bad("unit_mismatch", o.id, f"unknown observer form {o.form!r}")
        for rid, _coef in o.operands:
            if rid not in res_ids:
                bad("dangling_reference", o.id,
                    f"operand references missing reservoir {rid!r}")
        if o.form == "energy_over_heat_capacity_mass":
            n_energy = len(o.energy_operands(kinds))
            n_mass = len(o.mass_operands(kinds))
            if n_energy != 1 or n_mass < 1:
                bad("unit_mismatch", o.id,
                    f"ratio observer needs exactly 1 energy and >=1 mass operands, "
                    f"got {n_energy} energy / {n_mass} mass")
        if o.bounds is not None:
            lo, hi = o.bounds
            if lo is not None and hi is not None and lo > hi:
                bad("bound_inversion", o.id, f"bounds {lo} > {hi}")
        if o.bound_encoding not in BOUND_ENCODINGS:
            bad("unit_mismatch", o.id, f"unknown bound encoding {o.bound_encoding!r}")

    for p in graph.processes:
        if p.power_lower < 0:
            bad("bound_inversion", p.id, "power_lower must be >= 0")
        if p.power_upper <= 0:
            bad("bound_inversion", p.id, "power_upper must be > 0")
        if p.power_lower > p.power_upper:
            bad("bound_inversion", p.id,
                f"power_lower {p.power_lower} > power_upper {p.power_upper}")
        if p.ramp_ratio_lower is not None and not (0 < p.ramp_ratio_lower <= 1):
            bad("bound_inversion", p.id, "ramp_ratio_lower must be in (0, 1]")
        if p.ramp_ratio_upper is not None and p.ramp_ratio_upper < 1:
            bad("bound_inversion", p.id, "ramp_ratio_upper must be >= 1")
        for e in p.effects:
            if e.reservoir not in res_ids:
                bad("dangling_reference", p.id,
                    f"effect references missing reservoir {e.reservoir!r}")
            if e.direction not in DIRECTIONS:
                bad("unit_mismatch", p.id, f"unknown direction {e.direction!r}")
        for f in p.fuel_inputs:
            if f.efficiency <= 0:
                bad("bound_inversion", p.id,
                    f"fuel {f.fuel!r} efficiency must be > 0")
            check_series(f.price_series, p.id, state_anchored_ok=False)

    heat_slots = {(c.heat_flow.process, c.heat_flow.flow) for c in graph.couplings}
    mass_tags = {(c.mass_flow.process, c.mass_flow.flow)
                 for c in graph.couplings if isinstance(c.mass_flow, FlowRef)}
    for p in graph.processes:
        for e in p.effects:
            if e.flow is None:
                continue
            key = (p.id, e.flow)
            if key not in heat_slots and key not in mass_tags:
                bad("dangling_reference", p.id,
                    f"flow label {e.flow!r} is referenced by no coupling")

    proc_by_id = {p.id: p for p in graph.processes}
    for i, c in enumerate(graph.couplings):
        ent = f"coupling[{i}]"
        if c.heat_capacity <= 0:
            bad("bound_inversion", ent, "heat_capacity must be > 0")
        hp = proc_by_id.get(c.heat_flow.process)
        if hp is None:
            bad("dangling_reference", ent,
                f"heat flow references missing process {c.heat_flow.process!r}")
        else:
            slots = [e for e in hp.effects if e.flow == c.heat_flow.flow]
            if c.heat_flow.flow is None or not slots:
                bad("dangling_reference", ent,
                    f"process {hp.id!r} has no flow labelled {c.heat_flow.flow!r}")
            for e in slots:
                if kinds.get(e.reservoir) != "energy_joule":
                    bad("unit_mismatch", ent,
                        f"heat flow feeds non-energy reservoir {e.reservoir!r}")
        if isinstance(c.mass_flow, SeriesRef):
            check_series(c.mass_flow.series, ent, state_anchored_ok=False)
        else:
            mp = proc_by_id.get(c.mass_flow.process)
            if mp is None:
                bad("dangling_reference", ent,
                    f"mass flow references missing process {c.mass_flow.process!r}")
            elif len(mp.fuel_inputs) > 1:
                bad("unit_mismatch", ent,
                    f"coupled process {mp.id!r} must be fuel-less or single-fuel")
        temp = c.temperature
        if isinstance(temp, FlowRef):
            if temp.process not in obs_ids:
                bad("dangling_reference", ent,
                    f"temperature references missing observer {temp.process!r}")
        elif isinstance(temp, SeriesRef):
            check_series(temp.series, ent)

    if graph.discretize is not None:
        tag = graph.discretize
        if tag.reservoir not in res_ids:
            bad("dangling_reference", "discretize",
                f"tag references missing reservoir {tag.reservoir!r}")
        lv = tag.levels
        if any(b <= a for a, b in zip(lv, lv[1:])):
            bad("bound_inversion", "discretize", "levels must be strictly increasing")
        if lv and tag.reservoir in res_ids:
            r = graph.reservoir(tag.reservoir)
            if lv[0] < r.level_lower or lv[-1] > r.level_upper:
                bad("bound_inversion", "discretize",
                    f"levels {lv[0]}..{lv[-1]} outside reservoir bounds")

    v.sort(key=lambda m: (m.entity, m.code, m.message))
    return ValidationReport(v)


# ---------------------------------------------------------------------------
# State-equation term listing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Term:
    kind: str  # prior_level|inflow|outflow|decay|exogenous_inflow|exogenous_outflow
    label: str
    process: str | None = None
    temperature: str | None = None  # coupling temperature reference, if any


def state_equation_terms(graph: ModelGraph, reservoir_id: str, t: int) -> list[Term]:
    """Symbolic terms of level_{t+1} = level_t + inflows - outflows - decay."""
    res = graph.reservoir(reservoir_id)  # raises on unknown id
    T = graph.time_grid.horizon_steps
    if not (0 <= t < T):
        raise ModelError(f"step {t} outside 0..{T - 1}")

    terms = [Term("prior_level", f"{reservoir_id}[{t}]")]
    for p in graph.processes:
        for e in p.effects:
            if e.reservoir != reservoir_id:
                continue
            kind = "inflow" if e.direction == "inflow" else "outflow"
            temp = None
            if e.flow is not None:
                coupling = graph.coupling_for(p.id, e.flow)
                if coupling is not None:
                    temp = _temp_label(coupling.temperature)
            label = f"{p.id}.{e.flow}" if e.flow else p.id
            terms.append(Term(kind, label, process=p.id, temperature=temp))
    if res.exogenous_inflow:
        terms.append(Term("exogenous_inflow", res.exogenous_inflow))
    if res.exogenous_outflow:
        terms.append(Term("exogenous_outflow", res.exogenous_outflow))
    if res.decay is not None:
        ref = res.decay.reference_signal or "0"
        src = res.decay.observer if res.decay.form == "affine_in_observer" else "level"
        terms.append(Term("decay", f"{res.decay.coefficient:g}*({src}-{ref})"))
    return terms


def _temp_label(temp) -> str:
    if isinstance(temp, FlowRef):
        return temp.process
    if isinstance(temp, SeriesRef):
        return temp.series
    return f"{temp:g}"


# ---------------------------------------------------------------------------
# JSON model files
# ---------------------------------------------------------------------------

_TOP_KEYS = {"time", "reservoirs", "observers", "processes", "couplings",
             "series", "discretize"}


def _reject_unknown(data: dict, allowed: set[str], where: str):
    unknown = set(data) - allowed
    if unknown:
        raise ModelError(f"{where}: unknown keys {sorted(unknown)}")


def model_to_dict(graph: ModelGraph) -> dict:
    def ref(x):
        if isinstance(x, FlowRef):
            out = {"process": x.process}
            if x.flow is not None:
                out["flow"] = x.flow
            return out
        if isinstance(x, SeriesRef):
            return {"series": x.series}
        return {"constant": x}

    def temp_ref(x):
        if isinstance(x, FlowRef):
            return {"observer": x.process}
        return ref(x)

    out = {
        "time": {
            "horizon_steps": graph.time_grid.horizon_steps,
            "step_seconds": graph.time_grid.step_seconds,
        },
        "reservoirs": [],
        "observers": [],
        "processes": [],
        "couplings": [],
        "series": {k: np.asarray(v).tolist() for k, v in graph.exogenous_series.items()},
    }
    for r in graph.reservoirs:
        d = {
            "id": r.id,
            "quantity_kind": r.quantity_kind,
            "level_lower": r.level_lower,
            "level_upper": r.level_upper,
        }
        if isinstance(r.initial_level, InitialExpression):
            d["initial_level"] = {
                "scale": r.initial_level.scale,
                "series_factors": [list(f) for f in r.initial_level.series_factors],
            }
        elif r.initial_level is not None:
            d["initial_level"] = r.initial_level
        if r.decay is not None:
            dd = {"form": r.decay.form, "coefficient": r.decay.coefficient}
            if r.decay.observer is not None:
                dd["observer"] = r.decay.observer
            if r.decay.reference_signal is not None:
                dd["reference_signal"] = r.decay.reference_signal
            d["decay"] = dd
        if r.exogenous_inflow:
            d["exogenous_inflow"] = r.exogenous_inflow
        if r.exogenous_outflow:
            d["exogenous_outflow"] = r.exogenous_outflow
        if r.terminal_level is not None:
            d["terminal_level"] = {
                "value": r.terminal_level.value,
                "sense": r.terminal_level.sense,
            }
        out["reservoirs"].append(d)
    for o in graph.observers:
        d = {
            "id": o.id,
            "form": o.form,
            "operands": [list(op) for op in o.operands],
            "bound_encoding": o.bound_encoding,
        }
        if o.bounds is not None:
            d["bounds"] = list(o.bounds)
        if o.target is not None:
            d["target"] = o.target
        out["observers"].append(d)
    for p in graph.processes:
        d = {
            "id": p.id,
            "effects": [
                {k: v for k, v in (
                    ("reservoir", e.reservoir), ("direction", e.direction),
                    ("gain", e.gain), ("flow", e.flow)) if v is not None}
                for e in p.effects
            ],
            "fuel_inputs": [
                {"fuel": f.fuel, "price_series": f.price_series,
                 "efficiency": f.efficiency}
                for f in p.fuel_inputs
            ],
            "power_lower": p.power_lower,
            "power_upper": p.power_upper,
        }
        if p.ramp_ratio_lower is not None:
            d["ramp_ratio_lower"] = p.ramp_ratio_lower
        if p.ramp_ratio_upper is not None:
            d["ramp_ratio_upper"] = p.ramp_ratio_upper
        out["processes"].append(d)
    for c in graph.couplings:
        out["couplings"].append({
            "heat_flow": ref(c.heat_flow),
            "mass_flow": ref(c.mass_flow),
            "temperature": temp_ref(c.temperature),
            "heat_capacity": c.heat_capacity,
        })
    if graph.discretize is not None:
        out["discretize"] = {
            "reservoir": graph.discretize.reservoir,
            "levels": list(graph.discretize.levels),
            "scale_constant": graph.discretize.heat_capacity,
        }
    return out


def model_from_dict(data: dict) -> ModelGraph:
    _reject_unknown(data, _TOP_KEYS, "model")
    time = data.get("time", {})
    _reject_unknown(time, {"horizon_steps", "step_seconds"}, "time")
    grid = TimeGrid(int(time.get("horizon_steps", 0)),
                    float(time.get("step_seconds", 0.0)))

    reservoirs = []
    for d in data.get("reservoirs", []):
        _reject_unknown(d, {"id", "quantity_kind", "level_lower", "level_upper",
                            "initial_level", "decay", "exogenous_inflow",
                            "exogenous_outflow", "terminal_level"},
                        f"reservoir {d.get('id')}")
        init = d.get("initial_level")
        if isinstance(init, dict):
            _reject_unknown(init, {"scale", "series_factors"}, "initial_level")
            init = InitialExpression(
                float(init["scale"]),
                tuple((str(s), int(i)) for s, i in init.get("series_factors", [])),
            )
        decay = None
        if "decay" in d:
            dd = d["decay"]
            _reject_unknown(dd, {"form", "coefficient", "observer",
                                 "reference_signal"}, "decay")
            decay = DecayLaw(dd["form"], float(dd["coefficient"]),
                             dd.get("observer"), dd.get("reference_signal"))
        terminal = None
        if "terminal_level" in d:
            td = d["terminal_level"]
            _reject_unknown(td, {"value", "sense"}, "terminal_level")
            terminal = TerminalCondition(float(td["value"]), td.get("sense", "="))
        reservoirs.append(ReservoirSpec(
            d["id"], d["quantity_kind"], float(d["level_lower"]),
            float(d["level_upper"]), init, decay,
            d.get("exogenous_inflow"), d.get("exogenous_outflow"), terminal))

    observers = []
    for d in data.get("observers", []):
        _reject_unknown(d, {"id", "form", "operands", "bounds",
                            "bound_encoding", "target"}, f"observer {d.get('id')}")
        bounds = None
        if "bounds" in d and d["bounds"] is not None:
            lo, hi = d["bounds"]
            bounds = (None if lo is None else float(lo),
                      None if hi is None else float(hi))
        observers.append(ObserverSpec(
            d["id"], d["form"],
            tuple((str(r), float(c)) for r, c in d["operands"]),
            bounds, d.get("bound_encoding", "direct"), d.get("target")))

    processes = []
    for d in data.get("processes", []):
        _reject_unknown(d, {"id", "effects", "fuel_inputs", "power_lower",
                            "power_upper", "ramp_ratio_lower", "ramp_ratio_upper"},
                        f"process {d.get('id')}")
        effects = []
        for e in d.get("effects", []):
            _reject_unknown(e, {"reservoir", "direction", "gain", "flow"}, "effect")
            effects.append(Effect(e["reservoir"], e["direction"],
                                  float(e.get("gain", 1.0)), e.get("flow")))
        fuels = []
        for f in d.get("fuel_inputs", []):
            _reject_unknown(f, {"fuel", "price_series", "efficiency"}, "fuel")
            fuels.append(FuelInput(f["fuel"], f["price_series"],
                                   float(f["efficiency"])))
        processes.append(ProcessSpec(
            d["id"], tuple(effects), tuple(fuels),
            float(d.get("power_lower", 0.0)),
            float(d.get("power_upper", float("inf"))),
            d.get("ramp_ratio_lower"), d.get("ramp_ratio_upper")))

    def parse_ref(d: dict, allow_series: bool):
        _reject_unknown(d, {"process", "flow", "series", "observer", "constant"},
                        "flow reference")
        if "process" in d:
            return FlowRef(d["process"], d.get("flow"))
        if "series" in d and allow_series:
            return SeriesRef(d["series"])
        if "observer" in d:
            return FlowRef(d["observer"])
        if "constant" in d:
            return float(d["constant"])
        raise ModelError(f"bad flow reference {d}")

    couplings = []
    for d in data.get("couplings", []):
        _reject_unknown(d, {"heat_flow", "mass_flow", "temperature",
                            "heat_capacity"}, "coupling")
        couplings.append(FlowCoupling(
            parse_ref(d["heat_flow"], allow_series=False),
            parse_ref(d["mass_flow"], allow_series=True),
            parse_ref(d["temperature"], allow_series=True),
            float(d["heat_capacity"])))

    series = {k: np.asarray(v, dtype=float) for k, v in data.get("series", {}).items()}

    tag = None
    if "discretize" in data and data["discretize"] is not None:
        d = data["discretize"]
        _reject_unknown(d, {"reservoir", "levels", "scale_constant"}, "discretize")
        tag = DiscretizationTag(d["reservoir"], tuple(float(x) for x in d["levels"]),
                                float(d["scale_constant"]))
    return ModelGraph(grid, reservoirs, observers, processes, couplings,
                      series, tag)


def save_model(graph: ModelGraph, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(graph), fh, indent=2)


def load_model(path) -> ModelGraph:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
