"""Ready-made reservoir graphs for five industrial processes.

Each builder is a pure function of a parameter set and a time grid, and its
output always passes :func:`reservoir_flex.model.validate` cleanly.  HVAC
and the induction furnace compile to purely linear programs; the oven (in
continuous mode), the cooling plant and the electrolysis bath carry genuine
bilinear products.

Series-valued parameters are given as plain arrays; builders install them
in the graph under stable names.  Power-like bounds are watts (or kg/s for
pure transfer processes) and are converted to per-step amounts by the
compiler.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .model import (
    DecayLaw,
    DiscretizationTag,
    Effect,
    FlowCoupling,
    FlowRef,
    FuelInput,
    InitialExpression,
    ModelError,
    ModelGraph,
    ObserverSpec,
    ProcessSpec,
    ReservoirSpec,
    SeriesRef,
    TerminalCondition,
    TimeGrid,
)


def _series(values, grid: TimeGrid, name: str, allow_anchor=True) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    T = grid.horizon_steps
    if arr.ndim == 0:
        arr = np.full(T, float(arr))
    if arr.shape[0] != T and not (allow_anchor and arr.shape[0] == T + 1):
        raise ModelError(
            f"series {name!r} has {arr.shape[0]} values, horizon wants {T}"
        )
    return arr


def params_from_dict(cls, data: dict):
    """Build a parameter dataclass from JSON-style data, rejecting unknown keys."""
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ModelError(f"{cls.__name__}: unknown keys {sorted(unknown)}")
    return cls(**data)


# ---------------------------------------------------------------------------
# HVAC
# ---------------------------------------------------------------------------


@dataclass
class HvacParams:
    heat_capacity: float          # C_p of air, J/(kg K)
    air_mass: float               # kg, treated as constant
    loss_coefficient: float       # W/K
    t_min: float
    t_max: float
    t_initial: float
    outside_temperature: object   # K, per step
    heater_price: object          # currency/MWh, per step
    heater_efficiency: float = 1.0
    heater_power_max: float = float("inf")
    chiller_cop: float | None = None   # None disables the chiller
    chiller_price: object | None = None
    chiller_power_max: float = float("inf")
    target: float | None = None

    def __post_init__(self):
        if min(self.heat_capacity, self.air_mass) <= 0 or self.loss_coefficient < 0:
            raise ModelError("hvac: C_p, m must be > 0 and k >= 0")
        if not (self.t_min <= self.t_initial <= self.t_max):
            raise ModelError("hvac: need t_min <= t_initial <= t_max")


def build_hvac(p: HvacParams, grid: TimeGrid) -> ModelGraph:
    cpm = p.heat_capacity * p.air_mass
    series = {
        "T_out": _series(p.outside_temperature, grid, "T_out"),
        "price_heat": _series(p.heater_price, grid, "price_heat", allow_anchor=False),
    }
    reservoirs = [ReservoirSpec(
        "E_room", "energy_joule",
        level_lower=cpm * p.t_min, level_upper=cpm * p.t_max,
        initial_level=cpm * p.t_initial,
        decay=DecayLaw("affine_in_observer", p.loss_coefficient,
                       observer="T_room", reference_signal="T_out"),
    )]
    observers = [ObserverSpec(
        "T_room", "linear_combination", (("E_room", 1.0 / cpm),),
        bounds=(p.t_min, p.t_max), bound_encoding="direct", target=p.target,
    )]
    processes = [ProcessSpec(
        "heater", (Effect("E_room", "inflow", 1.0),),
        (FuelInput("electricity", "price_heat", p.heater_efficiency),),
        power_lower=0.0, power_upper=p.heater_power_max,
    )]
    if p.chiller_cop is not None:
        series["price_ac"] = _series(
            p.chiller_price if p.chiller_price is not None else p.heater_price,
            grid, "price_ac", allow_anchor=False)
        processes.append(ProcessSpec(
            "ac", (Effect("E_room", "outflow", 1.0),),
            (FuelInput("electricity", "price_ac", p.chiller_cop),),
            power_lower=0.0, power_upper=p.chiller_power_max,
        ))
    return ModelGraph(grid, reservoirs, observers, processes, [], series)


# ---------------------------------------------------------------------------
# Industrial cooling (tower + chiller + buffer)
# ---------------------------------------------------------------------------


@dataclass
class CoolingParams:
    return_temperature: object        # K, water coming back from the processes
    water_demand: object              # kg per step drawn by the processes
    cop_tower: float
    cop_chiller: float
    tower_power_max: float            # W
    chiller_power_max: float          # W
    target_temperature: float         # K, buffer setpoint
    electricity_price: object         # currency/MWh
    water_heat_capacity: float = 4186.0
    half_band_low: float = 0.5
    half_band_high: float = 3.0
    tower_water_initial: float = 20_000.0
    buffer_water_initial: float = 20_000.0
    tower_temp_bounds: tuple[float, float] = (273.15, 333.15)
    water_bounds: tuple[float, float] | None = None  # shared box for both tanks
    transfer_rate_max: float | None = None           # kg/s tower -> buffer

    def __post_init__(self):
        if self.half_band_low <= 0 or self.half_band_high <= 0:
            raise ModelError("cooling: half bands must be > 0")
        if min(self.cop_tower, self.cop_chiller) <= 0:
            raise ModelError("cooling: COPs must be > 0")
        if np.any(np.asarray(self.water_demand, dtype=float) < 0):
            raise ModelError("cooling: water demand must be nonnegative")


def build_cooling(p: CoolingParams, grid: TimeGrid, flex: str = "low") -> ModelGraph:
    if flex not in ("low", "high"):
        raise ModelError(f"cooling: flex must be 'low' or 'high', got {flex!r}")
    C = p.water_heat_capacity
    band = p.half_band_low if flex == "low" else p.half_band_high
    t_lo, t_hi = p.target_temperature - band, p.target_temperature + band
    demand = _series(p.water_demand, grid, "water_demand", allow_anchor=False)
    series = {
        "T_return": _series(p.return_temperature, grid, "T_return"),
        "water_demand": demand,
        "price_elec": _series(p.electricity_price, grid, "price_elec",
                              allow_anchor=False),
    }
    if p.water_bounds is None:
        # Keep a minimum stock in both tanks: the tank temperature divides
        # by the water mass, and a tight floor also shrinks McCormick boxes.
        top = p.tower_water_initial + p.buffer_water_initial + float(demand.sum())
        w_lo = 0.05 * min(p.tower_water_initial, p.buffer_water_initial)
        w_hi = top
    else:
        w_lo, w_hi = p.water_bounds
    ct_lo, ct_hi = p.tower_temp_bounds
    e_tower_hi = C * w_hi * ct_hi
    e_buffer_hi = C * w_hi * max(t_hi, ct_hi)

    reservoirs = [
        ReservoirSpec("water_tower", "mass_kg", w_lo, w_hi,
                      initial_level=p.tower_water_initial),
        ReservoirSpec("water_buffer", "mass_kg", w_lo, w_hi,
                      initial_level=p.buffer_water_initial,
                      exogenous_outflow="water_demand"),
        ReservoirSpec("return_water", "mass_kg", 0.0, 0.0, initial_level=0.0,
                      exogenous_inflow="water_demand"),
        ReservoirSpec("E_tower", "energy_joule", 0.0, e_tower_hi,
                      initial_level=C * p.tower_water_initial * p.target_temperature),
        ReservoirSpec("E_buffer", "energy_joule", 0.0, e_buffer_hi,
                      initial_level=C * p.buffer_water_initial * p.target_temperature),
    ]
    observers = [
        ObserverSpec("T_tower", "energy_over_heat_capacity_mass",
                     (("E_tower", 1.0), ("water_tower", C)),
                     bounds=(ct_lo, ct_hi), bound_encoding="cross_multiplied"),
        ObserverSpec("T_buffer", "energy_over_heat_capacity_mass",
                     (("E_buffer", 1.0), ("water_buffer", C)),
                     bounds=(t_lo, t_hi), bound_encoding="cross_multiplied",
                     target=p.target_temperature),
    ]
    dt = grid.step_seconds
    route_cap = float(demand.max()) / dt if demand.size else 1.0
    transfer_cap = p.transfer_rate_max if p.transfer_rate_max is not None else route_cap
    processes = [
        ProcessSpec("to_tower", (
            Effect("return_water", "outflow", 1.0),
            Effect("water_tower", "inflow", 1.0),
            Effect("E_tower", "inflow", 1.0, flow="heat"),
        ), power_upper=max(route_cap, 1e-9)),
        ProcessSpec("to_buffer", (
            Effect("return_water", "outflow", 1.0),
            Effect("water_buffer", "inflow", 1.0),
            Effect("E_buffer", "inflow", 1.0, flow="heat"),
        ), power_upper=max(route_cap, 1e-9)),
        ProcessSpec("transfer", (
            Effect("water_tower", "outflow", 1.0),
            Effect("water_buffer", "inflow", 1.0),
            Effect("E_tower", "outflow", 1.0, flow="heat"),
            Effect("E_buffer", "inflow", 1.0, flow="heat"),
        ), power_upper=max(transfer_cap, 1e-9)),
        ProcessSpec("draw_heat", (
            Effect("E_buffer", "outflow", 1.0, flow="heat"),
        )),
        ProcessSpec("tower_fans", (Effect("E_tower", "outflow", 1.0),),
                    (FuelInput("electricity", "price_elec", p.cop_tower),),
                    power_upper=p.tower_power_max),
        ProcessSpec("chiller", (Effect("E_buffer", "outflow", 1.0),),
                    (FuelInput("electricity", "price_elec", p.cop_chiller),),
                    power_upper=p.chiller_power_max),
    ]
    couplings = [
        FlowCoupling(FlowRef("to_tower", "heat"), FlowRef("to_tower"),
                     SeriesRef("T_return"), C),
        FlowCoupling(FlowRef("to_buffer", "heat"), FlowRef("to_buffer"),
                     SeriesRef("T_return"), C),
        FlowCoupling(FlowRef("transfer", "heat"), FlowRef("transfer"),
                     FlowRef("T_tower"), C),
        FlowCoupling(FlowRef("draw_heat", "heat"), SeriesRef("water_demand"),
                     FlowRef("T_buffer"), C),
    ]
    return ModelGraph(grid, reservoirs, observers, processes, couplings, series)


# ---------------------------------------------------------------------------
# Oven
# ---------------------------------------------------------------------------


@dataclass
class OvenParams:
    heat_capacity: float              # C_p of the charge, J/(kg K)
    loss_coefficient: float           # W/K
    t_max: float
    outside_temperature: object
    mass_min: float
    mass_max: float
    energy_max: float
    heater_price: object
    heater_power_max: float
    initial_mass: float
    initial_temperature: float
    t_min: float | None = None
    enforce_lower_band: bool = False
    energy_min: float = 0.0
    heater_efficiency: float = 1.0
    heater_power_min: float = 0.0
    heater_ramp: tuple[float, float] | None = None
    add_rate_max: float = 0.0         # kg/s; 0 disables charging
    removal_rate_max: float = 0.0     # kg/s; 0 disables withdrawal
    target_temperature: float | None = None
    total_mass: float | None = None   # terminal mass requirement
    levels: tuple[float, ...] = ()    # discretization level set

    def __post_init__(self):
        if self.mass_min <= 0:
            raise ModelError("oven: mass_min must be > 0 (temperature divides by mass)")
        if self.mass_min > self.mass_max:
            raise ModelError("oven: mass_min > mass_max")
        lv = tuple(self.levels)
        if lv and any(b <= a for a, b in zip(lv, lv[1:])):
            raise ModelError("oven: levels must be strictly increasing")


def build_oven(p: OvenParams, grid: TimeGrid, mode: str = "continuous") -> ModelGraph:
    if mode not in ("continuous", "discretized"):
        raise ModelError(f"oven: unknown mode {mode!r}")
    if mode == "discretized" and not p.levels:
        raise ModelError("oven: discretized mode needs a nonempty level set")
    cp = p.heat_capacity
    series = {
        "T_out": _series(p.outside_temperature, grid, "T_out"),
        "price_heat": _series(p.heater_price, grid, "price_heat", allow_anchor=False),
    }
    t_lo = p.t_min if (p.enforce_lower_band and p.t_min is not None) else None
    reservoirs = [
        ReservoirSpec("mass", "mass_kg", p.mass_min, p.mass_max,
                      initial_level=p.initial_mass),
        ReservoirSpec("E_oven", "energy_joule", p.energy_min, p.energy_max,
                      initial_level=cp * p.initial_mass * p.initial_temperature,
                      decay=DecayLaw("affine_in_observer", p.loss_coefficient,
                                     observer="T_oven", reference_signal="T_out"),
                      terminal_level=(
                          TerminalCondition(cp * p.target_temperature * p.total_mass,
                                            ">=")
                          if p.target_temperature is not None
                          and p.total_mass is not None else None)),
    ]
    observers = [ObserverSpec(
        "T_oven", "energy_over_heat_capacity_mass",
        (("E_oven", 1.0), ("mass", cp)),
        bounds=(t_lo, p.t_max), bound_encoding="cross_multiplied",
        target=p.target_temperature,
    )]
    processes = [ProcessSpec(
        "heater", (Effect("E_oven", "inflow", 1.0),),
        (FuelInput("electricity", "price_heat", p.heater_efficiency),),
        power_lower=p.heater_power_min, power_upper=p.heater_power_max,
        ramp_ratio_lower=p.heater_ramp[0] if p.heater_ramp else None,
        ramp_ratio_upper=p.heater_ramp[1] if p.heater_ramp else None,
    )]
    couplings = []
    if p.add_rate_max > 0:
        processes.append(ProcessSpec("add_material", (
            Effect("mass", "inflow", 1.0),
            Effect("E_oven", "inflow", 1.0, flow="heat"),
        ), power_upper=p.add_rate_max))
        couplings.append(FlowCoupling(FlowRef("add_material", "heat"),
                                      FlowRef("add_material"),
                                      SeriesRef("T_out"), cp))
    if p.removal_rate_max > 0:
        processes.append(ProcessSpec("remove_material", (
            Effect("mass", "outflow", 1.0),
            Effect("E_oven", "outflow", 1.0, flow="heat"),
        ), power_upper=p.removal_rate_max))
        couplings.append(FlowCoupling(FlowRef("remove_material", "heat"),
                                      FlowRef("remove_material"),
                                      FlowRef("T_oven"), cp))
    if p.total_mass is not None:
        reservoirs[0] = dataclasses.replace(
            reservoirs[0], terminal_level=TerminalCondition(p.total_mass, "="))
    tag = None
    if mode == "discretized":
        tag = DiscretizationTag("mass", tuple(float(x) for x in p.levels), cp)
    return ModelGraph(grid, reservoirs, observers, processes, couplings, series, tag)


# ---------------------------------------------------------------------------
# Induction furnace
# ---------------------------------------------------------------------------


@dataclass
class IfParams:
    alpha: float                  # J/(kg K): initial-energy coefficient
    beta: float                   # electrical-to-heat ratio
    delta: float                  # J lost per step
    batch_mass: float             # kg, fixed for the batch
    t_initial: float              # K, material starts at outside temperature
    required_specific_energy: float  # J/kg at the end of the batch
    power_min: float              # W
    power_max: float              # W
    ramp_ratio_lower: float
    ramp_ratio_upper: float
    batch_steps: int              # H
    electricity_price: object
    terminal_inequality: bool = False

    def __post_init__(self):
        if min(self.alpha, self.beta, self.delta) < 0:
            raise ModelError("furnace: alpha, beta, delta must be >= 0")
        if not (0 < self.ramp_ratio_lower <= 1 <= self.ramp_ratio_upper):
            raise ModelError("furnace: need 0 < ramp_lower <= 1 <= ramp_upper")
        if self.power_min > self.power_max:
            raise ModelError("furnace: power_min > power_max")


def build_induction_furnace(p: IfParams, grid: TimeGrid) -> ModelGraph:
    if grid.horizon_steps != p.batch_steps:
        raise ModelError(
            f"furnace: grid has {grid.horizon_steps} steps, batch wants {p.batch_steps}"
        )
    H = p.batch_steps
    dt = grid.step_seconds
    e0 = p.alpha * p.batch_mass * p.t_initial
    e_target = p.required_specific_energy * p.batch_mass
    e_hi = max(e0, e_target) + p.beta * p.power_max * dt * H
    series = {"price_elec": _series(p.electricity_price, grid, "price_elec",
                                    allow_anchor=False)}
    if p.delta > 0:
        series["standing_loss"] = np.full(H, p.delta)
    reservoirs = [
        ReservoirSpec("charge", "mass_kg", p.batch_mass, p.batch_mass,
                      initial_level=p.batch_mass),
        ReservoirSpec("E_melt", "energy_joule", 0.0, e_hi,
                      initial_level=e0,
                      exogenous_outflow="standing_loss" if p.delta > 0 else None,
                      terminal_level=TerminalCondition(
                          e_target, ">=" if p.terminal_inequality else "=")),
    ]
    processes = [ProcessSpec(
        "induction", (Effect("E_melt", "inflow", p.beta),),
        (FuelInput("electricity", "price_elec", 1.0),),
        power_lower=p.power_min, power_upper=p.power_max,
        ramp_ratio_lower=p.ramp_ratio_lower, ramp_ratio_upper=p.ramp_ratio_upper,
    )]
    return ModelGraph(grid, reservoirs, [], processes, [], series)


# ---------------------------------------------------------------------------
# Electrolysis bath
# ---------------------------------------------------------------------------


@dataclass
class ElectrolysisParams:
    cp_alumina: float
    cp_carbon: float
    cp_aluminium: float
    reaction_enthalpy: float       # note: J/(kg K); multiplies (T - T_out)
    loss_coefficient: float        # W/K
    conv_aluminium: float          # kg per (A step)
    conv_carbon: float
    conv_alumina: float
    t_min: float
    t_max: float
    alumina_feed: object           # kg per step
    siphon_period: int             # steps between tappings
    siphon_amount: float           # kg removed per tapping
    current_max: float             # A
    outside_temperature: object
    electricity_price: object
    initial_alumina: float
    initial_carbon: float
    initial_aluminium: float
    t_initial: float
    nominal_voltage: float = 5.0   # converter output voltage
    converter_efficiency: float = 1.0
    mass_upper: float = 1e6

    def __post_init__(self):
        if min(self.conv_aluminium, self.conv_carbon, self.conv_alumina) <= 0:
            raise ModelError("electrolysis: conversion rates must be > 0")
        if self.siphon_period < 1:
            raise ModelError("electrolysis: siphon period must be >= 1")


def build_electrolysis(p: ElectrolysisParams, grid: TimeGrid) -> ModelGraph:
    T = grid.horizon_steps
    dt = grid.step_seconds
    t_out = _series(p.outside_temperature, grid, "T_out")
    feed = _series(p.alumina_feed, grid, "alumina_feed", allow_anchor=False)
    siphon = np.zeros(T)
    for t in range(T):
        if (t + 1) % p.siphon_period == 0:
            siphon[t] = p.siphon_amount
    series = {
        "T_out": t_out,
        "alumina_feed": feed,
        "siphon": siphon,
        "price_elec": _series(p.electricity_price, grid, "price_elec",
                              allow_anchor=False),
        # Heat carried in by fresh alumina at the outside temperature.
        "feed_heat": p.cp_alumina * t_out[:T] * feed,
    }
    masses_0 = (p.initial_alumina, p.initial_carbon, p.initial_aluminium)
    cps = (p.cp_alumina, p.cp_carbon, p.cp_aluminium)
    e0 = sum(cp * m for cp, m in zip(cps, masses_0)) * p.t_initial
    e_hi = sum(cp * p.mass_upper for cp in cps) * p.t_max
    reservoirs = [
        ReservoirSpec("E_bath", "energy_joule", 0.0, e_hi, initial_level=e0,
                      decay=DecayLaw("affine_in_observer", p.loss_coefficient,
                                     observer="T_bath", reference_signal="T_out"),
                      exogenous_inflow="feed_heat"),
        ReservoirSpec("m_alumina", "mass_kg", 0.0, p.mass_upper,
                      initial_level=p.initial_alumina,
                      exogenous_inflow="alumina_feed"),
        ReservoirSpec("m_carbon", "mass_kg", 0.0, p.mass_upper,
                      initial_level=p.initial_carbon),
        ReservoirSpec("m_aluminium", "mass_kg", 0.0, p.mass_upper,
                      initial_level=p.initial_aluminium,
                      exogenous_outflow="siphon"),
    ]
    observers = [ObserverSpec(
        "T_bath", "energy_over_heat_capacity_mass",
        (("E_bath", 1.0), ("m_alumina", p.cp_alumina),
         ("m_carbon", p.cp_carbon), ("m_aluminium", p.cp_aluminium)),
        bounds=(p.t_min, p.t_max), bound_encoding="cross_multiplied",
    )]
    # Converter activity is the heating in joules; the average current is
    # activity / (eta * V * dt), which scales every reaction-rate gain.
    per_joule = 1.0 / (p.converter_efficiency * p.nominal_voltage * dt)
    g_al = p.conv_aluminium * per_joule
    g_c = p.conv_carbon * per_joule
    g_ox = p.conv_alumina * per_joule
    processes = [
        ProcessSpec("converter", (
            Effect("E_bath", "inflow", 1.0),
            Effect("m_aluminium", "inflow", g_al, flow="made_al"),
            Effect("m_carbon", "outflow", g_c),
            Effect("m_alumina", "outflow", g_ox),
            Effect("E_bath", "inflow", 1.0, flow="exo_in"),
            Effect("E_bath", "outflow", 1.0, flow="exo_out"),
        ), (FuelInput("electricity", "price_elec", p.converter_efficiency),),
            power_lower=0.0, power_upper=p.nominal_voltage * p.current_max),
        ProcessSpec("siphon_heat", (
            Effect("E_bath", "outflow", 1.0, flow="heat"),
        )),
    ]
    couplings = [
        # Exothermic reaction heat: dH * made_al * T, less dH * made_al * T_out.
        FlowCoupling(FlowRef("converter", "exo_in"),
                     FlowRef("converter", "made_al"),
                     FlowRef("T_bath"), p.reaction_enthalpy),
        FlowCoupling(FlowRef("converter", "exo_out"),
                     FlowRef("converter", "made_al"),
                     SeriesRef("T_out"), p.reaction_enthalpy),
        # Tapped aluminium leaves at the bath temperature.
        FlowCoupling(FlowRef("siphon_heat", "heat"), SeriesRef("siphon"),
                     FlowRef("T_bath"), p.cp_aluminium),
    ]
    return ModelGraph(grid, reservoirs, observers, processes, couplings, series)
