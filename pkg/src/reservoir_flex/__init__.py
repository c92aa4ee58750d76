"""Reservoir models of industrial processes and their flexibility.

Build a reservoir diagram (storage levels, observers, external processes,
flow couplings), compile it to a linear / mixed-integer / bilinear program,
solve it with the embedded solver stack, fit model parameters to measured
runs, and schedule consumption against electricity-price scenarios.
"""

__version__ = "0.1.0"

from .program import BilinearTerm, LinearConstraint, MathProgram, ProgramError, Variable
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
    load_model,
    save_model,
    state_equation_terms,
    validate,
)
from .templates import (
    CoolingParams,
    ElectrolysisParams,
    HvacParams,
    IfParams,
    OvenParams,
    build_cooling,
    build_electrolysis,
    build_hvac,
    build_induction_furnace,
    build_oven,
)
from .compiler import CompileError, DiscretizationSpec, compile_model, discretize, strengthen
from .lpfile import export_lp, read_lp, write_lp
from .solver import (
    Solution,
    SolverConfig,
    check_solution,
    solve,
    solve_bilinear,
    solve_lp,
    solve_milp,
)
from .sim import Trajectory, simulate, trajectory_assignment
from .fitting import FitResult, LooReport, Sample, fit, leave_one_out
from .scheduler import (
    PriceScenario,
    RollingConfig,
    Schedule,
    SavingsReport,
    baseline_asap,
    optimize_schedule,
    rolling_horizon,
    savings_report,
)

__all__ = [name for name in dir() if not name.startswith("_")]
