"""Command-line front end: compile / solve / fit / schedule / demo.

Exit codes: 0 success, 2 malformed input, 3 infeasible, 4 solver limit hit
(an incumbent, if any, is still written).  Every output directory gets a
run manifest, and the seed is recorded in machine-readable outputs so
identical invocations reproduce byte-identical files (the SVG differs only
in its version comment when the tool version changes).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .compiler import CompileError, DiscretizationSpec, compile_model, discretize, strengthen
from .fitting import (
    FittingError,
    Sample,
    fit,
    leave_one_out,
    read_samples_csv,
    write_samples_csv,
)
from .lpfile import export_lp
from .model import ModelError, TimeGrid, load_model, model_from_dict, validate
from .program import MathProgram, ProgramError
from .scheduler import (
    PriceScenario,
    RollingConfig,
    SchedulerError,
    baseline_asap,
    optimize_schedule,
    read_price_csv,
    rolling_horizon,
    savings_report,
    schedule_to_csv,
    write_price_csv,
)
from .solver import SolverConfig, solve
from .plots import consumption_profile_svg
from . import templates as tpl

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_LIMIT = 4

TEMPLATES = {
    "hvac": (tpl.HvacParams, tpl.build_hvac),
    "cooling": (tpl.CoolingParams, tpl.build_cooling),
    "oven": (tpl.OvenParams, tpl.build_oven),
    "induction_furnace": (tpl.IfParams, tpl.build_induction_furnace),
    "electrolysis": (tpl.ElectrolysisParams, tpl.build_electrolysis),
}

_INPUT_ERRORS = (ModelError, FittingError, SchedulerError, CompileError,
                 ProgramError)


class CliError(Exception):
    def __init__(self, message, code=EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("RESERVOIR_FLEX_THREADS", "1")))
    except ValueError:
        return 1


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise CliError(
            f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}")
    except OSError as exc:
        raise CliError(f"{path}: {exc}")


def _write_json(path: Path, data: dict, seed=None) -> None:
    if seed is not None:
        data = dict(data)
        data["seed"] = seed
    data = dict(data)
    data.setdefault("tool_version", __version__)
    path.write_text(json.dumps(data, indent=2) + "\n")


def _manifest(outdir: Path, args, subcommand: str, inputs: list[str]) -> None:
    _write_json(outdir / "manifest.json", {
        "subcommand": subcommand,
        "inputs": inputs,
        "output_dir": str(outdir),
        "seed": getattr(args, "seed", None),
        "overrides": {
            k: v for k, v in (("discretize", getattr(args, "discretize", None)),
                              ("strengthen", getattr(args, "strengthen", False)),
                              ("rolling", getattr(args, "rolling", None)))
            if v
        },
    })


def _graph_from_args(args):
    if args.template:
        if not args.params:
            raise CliError("--template needs --params")
        data = _load_json(args.params)
        time = data.pop("time", None)
        if time is None:
            raise CliError("params JSON needs a 'time' object "
                           "{horizon_steps, step_seconds}")
        grid = TimeGrid(int(time["horizon_steps"]), float(time["step_seconds"]))
        cls, builder = TEMPLATES[args.template]
        extra = {}
        if args.template == "cooling":
            extra["flex"] = data.pop("flex", "low")
        if args.template == "oven":
            extra["mode"] = data.pop("mode", "continuous")
        params = tpl.params_from_dict(cls, data)
        return builder(params, grid, **extra)
    if not args.model:
        raise CliError("give a model.json or --template/--params")
    return load_model(args.model)


def _parse_discretize(value: str) -> dict:
    if value.startswith("levels="):
        levels = json.loads(value[len("levels="):])
        return {"levels": levels}
    return _load_json(value)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_compile(args) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    graph = _graph_from_args(args)
    report = validate(graph)
    if not report.ok:
        print(str(report), file=sys.stderr)
        return EXIT_INPUT
    program = compile_model(graph)
    spec = None
    if args.discretize:
        info = _parse_discretize(args.discretize)
        tag = graph.discretize
        spec = DiscretizationSpec(
            target_reservoir=info.get("target_reservoir",
                                      tag.reservoir if tag else "mass"),
            levels=tuple(info.get("levels", tag.levels if tag else ())),
            scale_constant=float(info.get("scale_constant",
                                          tag.heat_capacity if tag else 1.0)),
        )
    elif graph.discretize is not None:
        spec = DiscretizationSpec.from_tag(graph.discretize)
    if spec is not None:
        program = discretize(program, spec)
        if args.strengthen:
            spec.clique_strengthening = True
            spec.lower_bound_strengthening = True
            program = strengthen(program, spec)
    (outdir / "program.json").write_text(program.to_json() + "\n")
    if args.lp:
        export_lp(program, outdir / args.lp,
                  allow_quadratic=bool(program.bilinear_terms))
    _manifest(outdir, args, "compile",
              [args.model or f"template:{args.template}"])
    print(program.summary())
    return EXIT_OK


def cmd_solve(args) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    program = MathProgram.from_dict(_load_json(args.program))
    cfg = SolverConfig(
        gap_tolerance=args.gap,
        node_limit=args.node_limit,
        time_limit_seconds=args.time_limit,
    )
    sol = solve(program, cfg)
    (outdir / "solution.json").write_text(sol.to_json() + "\n")
    _manifest(outdir, args, "solve", [args.program])
    print(f"status={sol.status} objective={sol.objective:.9g} "
          f"bound={sol.best_bound:.9g} gap={sol.gap:.3g} nodes={sol.node_count}")
    if sol.status == "optimal":
        return EXIT_OK
    if sol.status in ("infeasible", "unbounded"):
        return EXIT_INFEASIBLE
    return EXIT_LIMIT


def cmd_fit(args) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    samples = read_samples_csv(args.samples)
    result = fit(samples, variance_bound=args.variance_bound)
    _write_json(outdir / "fit.json", result.to_dict(), seed=args.seed)
    print(f"alpha={result.alpha:.6g} beta_bar={result.beta_bar:.6g} "
          f"delta={result.delta:.6g} sse={result.sse:.6g}")
    if args.loo:
        rep = leave_one_out(samples, variance_bound=args.variance_bound,
                            threads=_threads())
        _write_json(outdir / "loo.json", rep.to_dict(), seed=args.seed)
        print(f"loo_rmse={rep.rmse:.6g} J  ratio={100 * rep.ratio:.2f}%")
    _manifest(outdir, args, "fit", [args.samples])
    return EXIT_OK


def _parse_rolling(tokens) -> dict:
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise CliError(f"--rolling expects key=value tokens, got {tok!r}")
        key, val = tok.split("=", 1)
        if key not in ("window", "advance"):
            raise CliError(f"--rolling: unknown key {key!r}")
        out[key] = int(val)
    return out


def cmd_schedule(args) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    graph = _graph_from_args(args)
    prices = read_price_csv(args.prices)
    T = graph.time_grid.horizon_steps
    if len(prices) < T:
        raise CliError(f"price scenario has {len(prices)} steps, model needs {T}")
    cfg = SolverConfig(gap_tolerance=args.gap, node_limit=args.node_limit)

    if args.rolling is not None:
        rc = RollingConfig(total_horizon=T, **_parse_rolling(args.rolling))
        sched = rolling_horizon(graph, prices, rc, cfg)
    else:
        sched = optimize_schedule(graph, prices, cfg)

    (outdir / "schedule.csv").write_text(schedule_to_csv(sched))
    report = {
        "feasible": sched.feasible,
        "total_cost": sched.total_cost,
        "solver_status": sched.solver_status,
        "node_count": sched.node_count,
    }
    if sched.stats is not None:
        report["rolling"] = {"windows": sched.stats.windows,
                             "mean_nodes": sched.stats.mean_nodes}
    if sched.infeasible_window is not None:
        report["infeasible_window"] = sched.infeasible_window

    reference = None
    if args.baseline:
        base = baseline_asap(graph, prices)
        (outdir / "baseline.csv").write_text(schedule_to_csv(base))
        if base.feasible and sched.feasible:
            report["savings"] = savings_report(base, sched).to_dict()
        reference = base.total_consumption()

    svg = consumption_profile_svg(
        np.asarray(prices.values[:sched.horizon_steps]),
        sched.total_consumption(), reference=reference,
        title="consumption vs price")
    (outdir / "profile.svg").write_text(svg)
    _write_json(outdir / "report.json", report, seed=args.seed)
    _manifest(outdir, args, "schedule",
              [args.model or f"template:{args.template}", args.prices])
    print(f"cost={sched.total_cost:.6g} feasible={sched.feasible} "
          f"status={sched.solver_status}")
    if not sched.feasible:
        if sched.infeasible_window is not None:
            print(f"infeasible at rolling window {sched.infeasible_window}",
                  file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


# ---------------------------------------------------------------------------
# Demo presets: synthetic analogues of the two case studies
# ---------------------------------------------------------------------------


def _demo_furnace(outdir: Path, seed: int) -> int:
    rng = np.random.default_rng(seed)
    alpha, beta, delta = 450.0, 0.9, 9.0e8
    H = 12
    samples = []
    energies = []
    for i in range(20):
        mass = float(rng.uniform(50_000, 70_000))
        t0 = float(rng.uniform(283, 298))
        powers = rng.uniform(0.8e6, 3.5e6, H)
        energy = alpha * mass * t0 + beta * 3600.0 * powers.sum() - delta * H
        energies.append(energy)
        samples.append((mass, t0, powers, energy))
    mean_e = float(np.mean(energies))
    rows = [Sample(f"heat{i:02d}", m, t0, tuple(p),
                   e + float(rng.normal(0, 0.02 * mean_e)))
            for i, (m, t0, p, e) in enumerate(samples)]
    write_samples_csv(rows, outdir / "samples.csv")
    result = fit(rows)
    _write_json(outdir / "fit.json", result.to_dict(), seed=seed)
    loo = leave_one_out(rows, threads=_threads())
    _write_json(outdir / "loo.json", loo.to_dict(), seed=seed)

    mass = 60_000.0
    t0 = 288.15
    target_temp = 1800.0
    params = tpl.IfParams(
        alpha=result.alpha, beta=result.beta_bar, delta=result.delta,
        batch_mass=mass, t_initial=t0,
        required_specific_energy=result.alpha * target_temp,
        power_min=0.5e6, power_max=6.0e6,
        ramp_ratio_lower=0.5, ramp_ratio_upper=2.0, batch_steps=H,
        electricity_price=np.zeros(H))
    graph = tpl.build_induction_furnace(params, TimeGrid(H, 3600.0))
    day = PriceScenario.from_array(
        [62., 58., 55., 40., 22., 18., 17., 21., 35., 48., 57., 61.],
        label="two-level synthetic day")
    write_price_csv(day, outdir / "prices.csv")
    base = baseline_asap(graph, day)
    opt = optimize_schedule(graph, day)
    (outdir / "schedule.csv").write_text(schedule_to_csv(opt))
    report = {
        "fit": result.to_dict(),
        "loo_ratio_percent": 100 * loo.ratio,
        "baseline_cost": base.total_cost,
        "optimized_cost": opt.total_cost,
        "savings": savings_report(base, opt).to_dict(),
    }
    _write_json(outdir / "report.json", report, seed=seed)
    svg = consumption_profile_svg(np.asarray(day.values), opt.total_consumption(),
                                  reference=base.total_consumption(),
                                  title="furnace: reference vs optimized")
    (outdir / "profile.svg").write_text(svg)
    print(f"fit alpha={result.alpha:.4g} beta={result.beta_bar:.4g} "
          f"delta={result.delta:.4g} loo={100 * loo.ratio:.2f}%")
    print(f"baseline={base.total_cost:.2f} optimized={opt.total_cost:.2f} "
          f"savings={report['savings']['percent_savings']:.2f}%")
    return EXIT_OK


def _demo_cooling(outdir: Path, seed: int, hours: int) -> int:
    rng = np.random.default_rng(seed)
    t = np.arange(hours)
    daily = np.sin(2 * np.pi * ((t % 24) - 6) / 24.0)
    prices = 45.0 + 25.0 * daily + rng.normal(0, 2.0, hours)
    heat = 6000.0 + 2500.0 * np.clip(daily, 0, None) + rng.uniform(0, 300, hours)
    scenario = PriceScenario.from_array(prices, label="synthetic diurnal week")
    write_price_csv(scenario, outdir / "prices.csv")
    costs = {}
    for flex in ("low", "high"):
        params = tpl.CoolingParams(
            return_temperature=np.full(hours, 304.15),
            water_demand=heat,
            cop_tower=4.0, cop_chiller=3.0,
            tower_power_max=900e3, chiller_power_max=700e3,
            target_temperature=289.15,
            electricity_price=np.zeros(hours),
            tower_water_initial=25_000.0, buffer_water_initial=25_000.0,
            tower_temp_bounds=(285.15, 299.15),
            water_bounds=(8_000.0, 45_000.0),
            transfer_rate_max=3.0)
        graph = tpl.build_cooling(params, TimeGrid(hours, 3600.0), flex)
        rc = RollingConfig(window=8, advance=1, total_horizon=hours)
        sched = rolling_horizon(graph, scenario, rc,
                                SolverConfig(gap_tolerance=1e-3, node_limit=8,
                                             heuristic_period=2))
        costs[flex] = sched
        (outdir / f"schedule_{flex}.csv").write_text(schedule_to_csv(sched))
    low, high = costs["low"], costs["high"]
    gain = 100.0 * (low.total_cost - high.total_cost) / low.total_cost
    _write_json(outdir / "report.json", {
        "low_flex_cost": low.total_cost,
        "high_flex_cost": high.total_cost,
        "savings_percent": gain,
        "windows": low.stats.windows if low.stats else None,
    }, seed=seed)
    svg = consumption_profile_svg(prices, high.total_consumption(),
                                  reference=low.total_consumption(),
                                  title="cooling: low (grey) vs high flexibility")
    (outdir / "profile.svg").write_text(svg)
    print(f"low={low.total_cost:.2f} high={high.total_cost:.2f} "
          f"savings={gain:.2f}%")
    return EXIT_OK


def cmd_demo(args) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    _manifest(outdir, args, f"demo:{args.case}", [])
    if args.case == "furnace":
        return _demo_furnace(outdir, args.seed)
    return _demo_cooling(outdir, args.seed, args.hours)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="reservoir-flex",
        description="Reservoir models of industrial processes: compile, "
                    "solve, fit, and schedule against electricity prices.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("-o", "--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int, default=0,
                        help="seed recorded in outputs (and used by demos)")

    sp = sub.add_parser("compile", help="lower a model to a math program")
    sp.add_argument("model", nargs="?", help="model JSON file")
    sp.add_argument("--template", choices=sorted(TEMPLATES))
    sp.add_argument("--params", help="template parameter JSON")
    sp.add_argument("--discretize", metavar="SPEC",
                    help="spec JSON path or inline levels=[...]")
    sp.add_argument("--strengthen", action="store_true",
                    help="add clique and lower-bound rows")
    sp.add_argument("--lp", metavar="FILE", help="also export CPLEX LP format")
    common(sp)
    sp.set_defaults(func=cmd_compile)

    sp = sub.add_parser("solve", help="solve a compiled program")
    sp.add_argument("program", help="program JSON from `compile`")
    sp.add_argument("--gap", type=float, default=1e-6)
    sp.add_argument("--node-limit", type=int, default=500_000)
    sp.add_argument("--time-limit", type=float, default=None)
    common(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("fit", help="fit furnace parameters from samples CSV")
    sp.add_argument("samples", help="sample CSV (sample_id,mass_kg,t0_K,energy_J,p_*)")
    sp.add_argument("--loo", action="store_true", help="leave-one-out validation")
    sp.add_argument("--variance-bound", type=float, default=0.001)
    common(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("schedule", help="optimize consumption against prices")
    sp.add_argument("model", nargs="?", help="model JSON file")
    sp.add_argument("--template", choices=sorted(TEMPLATES))
    sp.add_argument("--params", help="template parameter JSON")
    sp.add_argument("--prices", required=True, help="price CSV")
    sp.add_argument("--baseline", action="store_true",
                    help="also run the as-soon-as-possible reference")
    sp.add_argument("--rolling", nargs="*", metavar="K=V",
                    help="rolling horizon, e.g. --rolling window=8 advance=1")
    sp.add_argument("--gap", type=float, default=1e-6)
    sp.add_argument("--node-limit", type=int, default=500_000)
    common(sp)
    sp.set_defaults(func=cmd_schedule)

    sp = sub.add_parser("demo", help="regenerate a synthetic case study")
    sp.add_argument("case", choices=["furnace", "cooling"])
    sp.add_argument("--hours", type=int, default=48,
                    help="cooling demo horizon (hours)")
    common(sp)
    sp.set_defaults(func=cmd_demo)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
