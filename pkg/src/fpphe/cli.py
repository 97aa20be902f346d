"""Command line interface: one binary, subcommand per module.

Exit codes: 0 success, 1 invalid input, 2 infeasible or unstable result,
3 resource cap exceeded.  Every randomized subcommand requires an explicit
--master-seed, and every output record embeds the input configuration.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import analytics, brwdiag, feasibility, graphkit, seeding, simcore
from .errors import (FpphError, InfeasibleError, InvalidParameterError,
                     ResourceCapError, UnstableEstimateError)
from .experiments import (TrialPlan, ci_selftest, estimate_event,
                          restricted_events, survival_proxy, tile_sweep)
from .rng import generator_for_trial


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _parse_tile(text: str) -> graphkit.TileParams:
    """Parse 'D=3,L=1,H=1,R=2' into TileParams."""
    fields = {}
    for part in text.split(","):
        if "=" not in part:
            raise InvalidParameterError(f"bad tile field {part!r}")
        k, v = part.split("=", 1)
        fields[k.strip()] = int(v)
    missing = {"D", "L", "H", "R"} - fields.keys()
    if missing:
        raise InvalidParameterError(f"tile spec missing {sorted(missing)}")
    return graphkit.TileParams(fields["D"], fields["L"], fields["H"], fields["R"])


def _parse_floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",")]


def _emit(text: str, out_path: str | None):
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(payload: dict, out_path: str | None):
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", out_path)


def _graph_from_args(args) -> graphkit.Graph:
    merge = getattr(args, "merge_parallel_edges", False)
    if getattr(args, "graph_json", None):
        with open(args.graph_json) as fh:
            return graphkit.Graph.from_dict(json.load(fh))
    if args.tile is None:
        raise InvalidParameterError("need --tile or --graph-json")
    p = _parse_tile(args.tile)
    if getattr(args, "phi", None) is not None:
        depth = getattr(args, "depth", None)
        if depth is None:
            raise InvalidParameterError("--phi requires --depth")
        return graphkit.build_tile_tree(args.phi, depth, p, merge)
    side = getattr(args, "side", None)
    if side:
        return graphkit.restrict_to_side(graphkit.build_tile(p, merge), side)
    return graphkit.build_tile(p, merge)


# ---------------------------------------------------------------------------
# Subcommand handlers.

def _cmd_graph(args) -> int:
    g = _graph_from_args(args)
    if args.format == "dot":
        _emit(graphkit.export_dot(g), args.out)
    else:
        _emit_json(g.to_dict(), args.out)
    return 0


def _cmd_simulate(args) -> int:
    g = _graph_from_args(args)
    origin = g.landmarks.get(args.origin)
    if origin is None:
        raise InvalidParameterError(f"graph has no landmark {args.origin!r}")
    rng = generator_for_trial(args.master_seed, args.trial_index)
    seeds = seeding.place_seeds(g, args.mu, {origin}, rng,
                                master_seed=args.master_seed)
    target = None
    if args.target is not None:
        target = g.landmarks.get(args.target)
        if target is None:
            raise InvalidParameterError(f"graph has no landmark {args.target!r}")
    max_infected = args.max_infected
    if target is None and args.horizon is None and max_infected is None:
        max_infected = g.vertex_count
    stop = simcore.StopCondition(target=target, time_horizon=args.horizon,
                                 max_infected=max_infected)
    sim = simcore.explicit_clock_simulate if args.oracle else simcore.simulate
    out = sim(g, origin, seeds, args.lam, stop, rng)
    header = {
        "config": {"mu": args.mu, "lambda": args.lam,
                   "master_seed": args.master_seed,
                   "trial_index": args.trial_index,
                   "origin": args.origin, "target": args.target,
                   "oracle": bool(args.oracle)},
    }
    if args.trace:
        _emit(json.dumps(header, sort_keys=True) + "\n" + out.trace_jsonl(), args.out)
    else:
        _emit_json({**header, "outcome": out.to_dict()}, args.out)
    return 0


def _cmd_estimate(args) -> int:
    with open(args.plan) as fh:
        plan_dict = json.load(fh)
    plan = TrialPlan.from_dict(plan_dict)
    if args.workers is not None:
        plan.workers = args.workers
    result = estimate_event(plan, z=args.z, audit=args.audit)
    _emit_json({"config": plan_dict, **result.to_dict()}, args.out)
    return 0


def _cmd_sweep(args) -> int:
    p = _parse_tile(args.tile)
    report = tile_sweep(p, args.lam, _parse_floats(args.mu), args.trials,
                        args.master_seed, workers=args.workers, z=args.z,
                        witness_z=args.witness_z)
    _emit(report.to_csv() if args.format == "csv" else report.to_jsonl(), args.out)
    return 0


def _cmd_restricted(args) -> int:
    p = _parse_tile(args.tile)
    thresholds = _parse_floats(args.thresholds) if args.thresholds else []
    results = restricted_events(p, args.side, args.mu, args.lam, thresholds,
                                args.trials, args.master_seed,
                                workers=args.workers, z=args.z)
    payload = {
        "config": {"tile": args.tile, "side": args.side, "mu": args.mu,
                   "lambda": args.lam, "thresholds": thresholds,
                   "trials": args.trials, "master_seed": args.master_seed},
        "results": {k: v.to_dict() for k, v in results.items()},
    }
    _emit_json(payload, args.out)
    return 0


def _cmd_survival(args) -> int:
    p = _parse_tile(args.tile)
    res = survival_proxy(args.phi, args.depth, p, args.mu, args.lam,
                         args.trials, args.master_seed, workers=args.workers,
                         z=args.z)
    payload = {
        "config": {"phi": args.phi, "depth": args.depth, "tile": args.tile,
                   "mu": args.mu, "lambda": args.lam, "trials": args.trials,
                   "master_seed": args.master_seed},
        **res.to_dict(),
    }
    _emit_json(payload, args.out)
    return 0


def _cmd_selftest(args) -> int:
    rep = ci_selftest(args.outer, args.inner, args.p_true, args.master_seed,
                      z=args.z)
    _emit_json({"config": {"master_seed": args.master_seed}, **rep.to_dict()},
               args.out)
    return 0


def _cmd_feasibility(args) -> int:
    with open(args.problem) as fh:
        spec = json.load(fh)
    constants = feasibility.RateConstants(**spec["constants"])
    lz = feasibility.lambda_zero(constants)
    problem = feasibility.FeasibilityProblem(
        lam=spec["lambda"], constants=constants,
        frak_c=spec["frak_c"], R=spec["R"])
    solution = feasibility.solve_hl(problem)
    _emit_json({"config": spec, "lambda_zero": lz, **solution.to_dict()},
               args.out)
    return 0 if solution.feasible else 2


def _cmd_estimate_rates(args) -> int:
    family = feasibility.GraphFamily(args.family, d=args.d)
    est = feasibility.estimate_rate_constants(
        family, args.gamma, range(args.k_min, args.k_max + 1), args.trials,
        args.target_exponent, args.master_seed)
    payload = {
        "config": {"family": args.family, "d": args.d, "gamma": args.gamma,
                   "k_min": args.k_min, "k_max": args.k_max,
                   "trials": args.trials,
                   "target_exponent": args.target_exponent,
                   "master_seed": args.master_seed},
        **est.to_dict(),
    }
    _emit_json(payload, args.out)
    return 0


def _cmd_analytics(args) -> int:
    op = args.operation
    if op == "gw":
        spec = analytics.GwSpec(args.d, args.mu)
        payload = {"extinction": analytics.gw_extinction(spec, args.tol)}
    elif op == "tech":
        c1, c2 = analytics.check_tech_cond(args.d, args.mu)
        payload = {"supercritical": c1, "second_moment_cond": c2}
    elif op == "p-one":
        payload = {"p_one": analytics.p_one(analytics.GwSpec(args.d, args.mu))}
    elif op == "quantile-const":
        payload = {"constant": analytics.edge_quantile_const(args.eps, args.gamma)}
    elif op == "frak-c":
        payload = {"frak_c": analytics.frak_c(args.eps, args.lam)}
    elif op == "janson-upper":
        payload = {"bound": analytics.janson_upper_tail(args.a_star, args.mean,
                                                        args.delta)}
    elif op == "janson-lower":
        payload = {"bound": analytics.janson_lower_tail(args.a_star, args.mean,
                                                        args.delta)}
    elif op == "phi":
        payload = {
            "phi": analytics.phi_from_params(args.d, args.mu2, args.eta,
                                             args.f, args.eps),
            "note": "eta is user-supplied (default 0), never computed",
        }
    elif op == "eps-max":
        payload = {"eps_max": analytics.epsilon_max(args.d, args.mu2, args.eta,
                                                    args.f)}
    elif op == "threshold":
        payload = {"threshold": analytics.tree_percolation_threshold(args.phi)}
    elif op == "inverse-limit":
        spec = analytics.GwSpec(args.d, args.mu)
        payload = {"limit": analytics.inverse_size_rate_limit(spec)}
    else:
        raise InvalidParameterError(f"unknown analytics operation {op!r}")
    _emit_json({"operation": op, **payload}, args.out)
    return 0


def _cmd_brw_diag(args) -> int:
    spec = brwdiag.GwSpec(args.d, args.mu)
    config = {"d": args.d, "mu": args.mu, "trials": args.trials,
              "master_seed": args.master_seed, "mode": args.mode}
    if args.mode == "min-passage":
        samples = brwdiag.min_passage(spec, args.gamma, args.n, args.trials,
                                      args.master_seed)
        payload = {
            "level": samples.level, "gamma": samples.gamma,
            "kept": samples.kept, "discarded_extinct": samples.discarded_extinct,
            "mean": float(np.mean(samples.values)),
            "std": float(np.std(samples.values)),
            "conditioning": "survival to the requested level, not survival forever",
        }
        if args.fit:
            c_hat, delta_hat = brwdiag.fit_concentration(samples)
            payload["tail_fit"] = {"C_hat": c_hat, "delta_hat": delta_hat}
    elif args.mode == "birth-stats":
        rows = brwdiag.generation_birth_stats(spec, args.c1, args.n,
                                              args.trials, args.master_seed)
        payload = {"rows": [vars(r) for r in rows], "c1": args.c1}
    elif args.mode == "inverse-size":
        res = brwdiag.inverse_size_rate(spec, args.n, args.trials,
                                        args.master_seed)
        payload = {"rates": res.rates, "theoretical_limit": res.theoretical_limit,
                   "surviving_trials": res.surviving_trials}
    elif args.mode == "extinction":
        freq = brwdiag.extinction_frequency(spec, args.trials, args.master_seed)
        payload = {"extinction_frequency": freq}
    else:
        raise InvalidParameterError(f"unknown brw-diag mode {args.mode!r}")
    _emit_json({"config": config, **payload}, args.out)
    return 0


# ---------------------------------------------------------------------------
# Argument wiring.

def _add_out(p):
    p.add_argument("--out", help="output path (default stdout)")


def _add_seeded(p):
    p.add_argument("--master-seed", type=int, required=True,
                   help="64-bit master seed (required, no silent entropy)")


def _add_workers(p):
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--z", type=float, default=1.96)


def build_parser() -> _Parser:
    parser = _Parser(prog="fpphe", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("graph", help="build and export a graph")
    p.add_argument("--tile", help="tile parameters D=..,L=..,H=..,R=..")
    p.add_argument("--graph-json", help="load a graph dump instead of building")
    p.add_argument("--side", choices=["upper", "lower"])
    p.add_argument("--phi", type=int, help="tile-tree branching factor")
    p.add_argument("--depth", type=int, help="tile-tree depth")
    p.add_argument("--merge-parallel-edges", action="store_true")
    p.add_argument("--format", choices=["json", "dot"], default="json")
    _add_out(p)
    p.set_defaults(func=_cmd_graph)

    p = sub.add_parser("simulate", help="single simulation run")
    p.add_argument("--tile")
    p.add_argument("--graph-json")
    p.add_argument("--side", choices=["upper", "lower"])
    p.add_argument("--phi", type=int)
    p.add_argument("--depth", type=int)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--origin", default="O")
    p.add_argument("--target")
    p.add_argument("--horizon", type=float)
    p.add_argument("--max-infected", type=int)
    p.add_argument("--trial-index", type=int, default=0)
    p.add_argument("--trace", action="store_true",
                   help="stream events as JSON lines")
    p.add_argument("--oracle", action="store_true",
                   help="use the explicit-clock reference implementation")
    _add_seeded(p)
    _add_out(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", help="Monte Carlo event probability")
    p.add_argument("--plan", required=True, help="JSON trial plan file")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--z", type=float, default=1.96)
    p.add_argument("--audit", action="store_true",
                   help="store per-trial success indicators")
    _add_out(p)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("sweep", help="tile sweep over a mu grid")
    p.add_argument("--tile", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--mu", required=True, help="comma-separated mu grid")
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--witness-z", type=float, default=3.0)
    p.add_argument("--format", choices=["jsonl", "csv"], default="jsonl")
    _add_seeded(p)
    _add_workers(p)
    _add_out(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("restricted", help="side-restricted passage events")
    p.add_argument("--tile", required=True)
    p.add_argument("--side", choices=["upper", "lower"], required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--thresholds", help="comma-separated time thresholds")
    p.add_argument("--trials", type=int, required=True)
    _add_seeded(p)
    _add_workers(p)
    _add_out(p)
    p.set_defaults(func=_cmd_restricted)

    p = sub.add_parser("survival", help="tile-tree reach probability proxy")
    p.add_argument("--tile", required=True)
    p.add_argument("--phi", type=int, required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--trials", type=int, required=True)
    _add_seeded(p)
    _add_workers(p)
    _add_out(p)
    p.set_defaults(func=_cmd_survival)

    p = sub.add_parser("selftest", help="Wilson interval coverage check")
    p.add_argument("--outer", type=int, default=1000)
    p.add_argument("--inner", type=int, default=1000)
    p.add_argument("--p-true", type=float, required=True)
    p.add_argument("--z", type=float, default=1.96)
    _add_seeded(p)
    _add_out(p)
    p.set_defaults(func=_cmd_selftest)

    p = sub.add_parser("feasibility", help="solve the (H,L) inequality system")
    p.add_argument("--problem", required=True,
                   help="JSON file: lambda, constants, frak_c, R")
    _add_out(p)
    p.set_defaults(func=_cmd_feasibility)

    p = sub.add_parser("estimate-rates", help="empirical passage-speed constants")
    p.add_argument("--family", choices=["path", "tree"], required=True)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--k-min", type=int, default=1)
    p.add_argument("--k-max", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--target-exponent", type=float, default=0.1)
    _add_seeded(p)
    _add_out(p)
    p.set_defaults(func=_cmd_estimate_rates)

    p = sub.add_parser("analytics", help="closed-form calculators")
    p.add_argument("operation",
                   choices=["gw", "tech", "p-one", "quantile-const", "frak-c",
                            "janson-upper", "janson-lower", "phi", "eps-max",
                            "threshold", "inverse-limit"])
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--mu2", type=float, default=0.0)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--a-star", type=float, default=1.0)
    p.add_argument("--mean", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--eta", type=float, default=0.0,
                   help="survival-margin constant (input only, default 0)")
    p.add_argument("--f", type=float, default=0.0,
                   help="extinction probability input")
    p.add_argument("--phi", type=int, default=2)
    _add_out(p)
    p.set_defaults(func=_cmd_analytics)

    p = sub.add_parser("brw-diag", help="branching random walk diagnostics")
    p.add_argument("mode", choices=["min-passage", "birth-stats",
                                    "inverse-size", "extinction"])
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--n", type=int, default=10,
                   help="level / max generation")
    p.add_argument("--c1", type=float, default=10.0)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--fit", action="store_true",
                   help="fit the concentration tail (min-passage mode)")
    _add_seeded(p)
    _add_out(p)
    p.set_defaults(func=_cmd_brw_diag)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InfeasibleError, UnstableEstimateError) as exc:
        print(f"fpphe: {exc}", file=sys.stderr)
        return 2
    except ResourceCapError as exc:
        print(f"fpphe: {exc}", file=sys.stderr)
        return 3
    except (FpphError, FileNotFoundError, KeyError, json.JSONDecodeError,
            ValueError) as exc:
        print(f"fpphe: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
