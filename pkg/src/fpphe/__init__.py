"""fpphe: simulation and analysis toolkit for first passage percolation in a
hostile environment - two competing infection types on finite multigraphs,
with graph builders, closed-form calculators, a feasibility solver, branching
random walk diagnostics, and a reproducible Monte Carlo harness."""

from .analytics import (GwSpec, check_tech_cond, edge_quantile_const,
                        epsilon_max, frak_c, gw_extinction,
                        inverse_size_rate_limit, janson_lower_tail,
                        janson_upper_tail, p_one, phi_from_params,
                        tree_percolation_threshold)
from .brwdiag import (fit_concentration, generation_birth_stats,
                      inverse_size_rate, min_passage, sample_brw)
from .errors import (FpphError, InfeasibleError, InvalidParameterError,
                     ResourceCapError, UnreachableTargetError,
                     UnstableEstimateError)
from .experiments import (EstimateResult, TrialPlan, ci_selftest,
                          estimate_event, restricted_events, run_trials,
                          survival_proxy, tile_sweep, wilson_interval)
from .feasibility import (FeasibilityProblem, FeasibilitySolution,
                          GraphFamily, RateConstants,
                          estimate_rate_constants, lambda_zero, solve_hl)
from .graphkit import (Graph, TileParams, build_capped_tree,
                       build_complete_tree, build_tile, build_tile_tree,
                       export_dot, graph_from_spec, restrict_to_side)
from .rng import generator_for_trial, trial_seed
from .seeding import SeedConfig, fixed_seeds, no_seeds, place_seeds
from .simcore import (SimOutcome, StopCondition, explicit_clock_simulate,
                      first_passage_time, simulate)

__version__ = "0.1.0"

__all__ = [
    "GwSpec", "check_tech_cond", "edge_quantile_const", "epsilon_max",
    "frak_c", "gw_extinction", "inverse_size_rate_limit", "janson_lower_tail",
    "janson_upper_tail", "p_one", "phi_from_params",
    "tree_percolation_threshold",
    "fit_concentration", "generation_birth_stats", "inverse_size_rate",
    "min_passage", "sample_brw",
    "FpphError", "InfeasibleError", "InvalidParameterError",
    "ResourceCapError", "UnreachableTargetError", "UnstableEstimateError",
    "EstimateResult", "TrialPlan", "ci_selftest", "estimate_event",
    "restricted_events", "run_trials", "survival_proxy", "tile_sweep",
    "wilson_interval",
    "FeasibilityProblem", "FeasibilitySolution", "GraphFamily",
    "RateConstants", "estimate_rate_constants", "lambda_zero", "solve_hl",
    "Graph", "TileParams", "build_capped_tree", "build_complete_tree",
    "build_tile", "build_tile_tree", "export_dot", "graph_from_spec",
    "restrict_to_side",
    "generator_for_trial", "trial_seed",
    "SeedConfig", "fixed_seeds", "no_seeds", "place_seeds",
    "SimOutcome", "StopCondition", "explicit_clock_simulate",
    "first_passage_time", "simulate",
]
