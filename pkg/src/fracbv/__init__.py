"""Fractional total variation TV^s of step functions, front tracking and the Lax-Oleinik formula."""

from .claw_ft import (
    EventStormError,
    Front,
    FrontTrackingState,
    InteractionEvent,
    PiecewiseAffineFlux,
    convex_envelope,
    evolve,
    next_interaction,
    polygonalize_flux,
    sample_solution,
    solve_riemann,
)
from .claw_lo import (
    ConvexFluxModel,
    DecayReport,
    LaxOleinikSolver,
    check_oleinik_holder,
    decay_report,
    estimate_degeneracy,
    estimate_q,
    invert_velocity,
    minimize_hopf,
    smallest_admissible_q,
    smoothing_report,
)
from .func_repr import GridFunction, Interval, StepFunction, restrict, shift_difference_lp, step_approximate
from .harness import InvariantViolation, RunReport, Scenario, compare_solvers, paper_examples, run_scenario
from .variation import (
    SExponent,
    Subdivision,
    VariationReport,
    extremal_points,
    lip_functional,
    tvs_grid_lower_bound,
    tvs_on_subdivision,
    tvs_plus_step,
    tvs_step_exact,
)

__all__ = [
    "ConvexFluxModel",
    "DecayReport",
    "EventStormError",
    "Front",
    "FrontTrackingState",
    "GridFunction",
    "InteractionEvent",
    "Interval",
    "InvariantViolation",
    "LaxOleinikSolver",
    "PiecewiseAffineFlux",
    "RunReport",
    "SExponent",
    "Scenario",
    "StepFunction",
    "Subdivision",
    "VariationReport",
    "check_oleinik_holder",
    "compare_solvers",
    "convex_envelope",
    "decay_report",
    "estimate_degeneracy",
    "estimate_q",
    "evolve",
    "extremal_points",
    "invert_velocity",
    "lip_functional",
    "minimize_hopf",
    "next_interaction",
    "paper_examples",
    "polygonalize_flux",
    "restrict",
    "run_scenario",
    "sample_solution",
    "shift_difference_lp",
    "smallest_admissible_q",
    "smoothing_report",
    "solve_riemann",
    "step_approximate",
    "tvs_grid_lower_bound",
    "tvs_on_subdivision",
    "tvs_plus_step",
    "tvs_step_exact",
]

__version__ = "0.1.0"
