"""Monte Carlo orchestration with deterministic parallelism.

Every trial owns a counter-based random stream keyed by (master_seed,
trial_index), so the multiset of trial outcomes - and every aggregate - is
bit-identical for any worker count.  Workers map to numba threads inside one
batched kernel; per-trial outputs land in trial-indexed slots.

Trials with the same master seed share their underlying uniforms across
parameter values (the seed field of trial i is coupled across mu), which makes
the rate-1-only control column of a sweep monotone trial by trial.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numba
import numpy as np
from numba import njit, prange

from . import simcore
from .errors import InvalidParameterError
from .graphkit import (Graph, ROLE_LOWER, ROLE_UPPER, TileParams, build_tile,
                       build_tile_tree, graph_from_spec, restrict_to_side)
from .simcore import (PTYPE_FPP1, PTYPE_FPPLAMBDA, STOP_WATCH, _GOLDEN,
                      _sim_core, _sm_finalize, _unit)

_I64_MAX = np.iinfo(np.int64).max


@njit(cache=True, parallel=True)
def _batch_kernel(indptr, adj_v, adj_e, roles, gens, excluded, mu, lam,
                  origin, target, use_watch, watch, master_seed, trial0, ntrials,
                  out_time, out_type, out_side, out_level, out_tseed, out_watch_hit):
    nv = indptr.shape[0] - 1
    for i in prange(ntrials):
        idx = trial0 + i
        st = np.empty(1, dtype=np.uint64)
        st[0] = _sm_finalize(master_seed + np.uint64(idx + 1) * _GOLDEN)
        seeds = np.empty(nv, dtype=np.bool_)
        for v in range(nv):
            seeds[v] = _unit(st) < mu
        for v in range(nv):
            if excluded[v]:
                seeds[v] = False
        times = np.full(nv, np.inf)
        types = np.full(nv, -1, dtype=np.int8)
        pv = np.full(nv, -1, dtype=np.int64)
        pe = np.full(nv, -1, dtype=np.int64)
        code = _sim_core(indptr, adj_v, adj_e, seeds, origin, lam, target,
                         np.inf, _I64_MAX, use_watch, watch, st,
                         times, types, pv, pe)
        if target >= 0:
            out_time[i] = times[target]
            out_type[i] = types[target]
            out_tseed[i] = seeds[target]
            p = pv[target]
            out_side[i] = roles[p] if p >= 0 else -1
            lvl = -1
            if types[target] == PTYPE_FPPLAMBDA:
                v = target
                while True:
                    par = pv[v]
                    if par < 0 or types[par] != PTYPE_FPPLAMBDA:
                        break
                    v = par
                lvl = gens[v]
            out_level[i] = lvl
        if use_watch:
            hit = code == STOP_WATCH
            if not hit:
                for v in range(nv):
                    if watch[v] and types[v] == PTYPE_FPP1:
                        hit = True
                        break
            out_watch_hit[i] = hit


@dataclass
class TrialBatch:
    """Per-trial statistics of a batched run with a target vertex."""

    target_time: np.ndarray
    target_type: np.ndarray
    target_side: np.ndarray       # role tag of the target's infecting parent
    winning_seed_level: np.ndarray
    target_is_seed: np.ndarray
    watch_hit: np.ndarray | None = None


def run_trials(g: Graph, origin: int, mu: float, lam: float, trials: int,
               master_seed: int, target: int | None = None,
               watch: np.ndarray | None = None, workers: int = 1,
               trial0: int = 0, excluded=None) -> TrialBatch:
    """Run `trials` independent seeded simulations and collect per-trial
    target statistics (and/or watch-set hits).

    `excluded` lists extra vertices that never host a seed (the origin is
    always excluded); with mu=1 this pins the seed set deterministically.
    """
    if trials < 1:
        raise InvalidParameterError("trials must be >= 1")
    if not (0.0 <= mu <= 1.0):
        raise InvalidParameterError(f"mu must be in [0,1], got {mu}")
    if lam <= 0:
        raise InvalidParameterError(f"lambda must be positive, got {lam}")
    if target is None and watch is None:
        raise InvalidParameterError("need a target vertex or a watch set")
    indptr, adj_v, adj_e = g.csr()
    excluded_mask = np.zeros(g.vertex_count, dtype=bool)
    excluded_mask[origin] = True
    if excluded is not None:
        for v in excluded:
            excluded_mask[int(v)] = True
    use_watch = watch is not None
    watch_arr = watch if use_watch else np.zeros(1, dtype=bool)

    out_time = np.full(trials, np.nan)
    out_type = np.full(trials, -1, dtype=np.int8)
    out_side = np.full(trials, -1, dtype=np.int8)
    out_level = np.full(trials, -1, dtype=np.int32)
    out_tseed = np.zeros(trials, dtype=bool)
    out_watch = np.zeros(trials, dtype=bool)

    old_threads = numba.get_num_threads()
    numba.set_num_threads(max(1, min(workers, numba.config.NUMBA_NUM_THREADS)))
    try:
        _batch_kernel(indptr, adj_v, adj_e, g.roles, g.generation, excluded_mask,
                      float(mu), float(lam), origin,
                      -1 if target is None else int(target),
                      use_watch, watch_arr,
                      np.uint64(master_seed & 0xFFFFFFFFFFFFFFFF),
                      trial0, trials,
                      out_time, out_type, out_side, out_level, out_tseed, out_watch)
    finally:
        numba.set_num_threads(old_threads)
    return TrialBatch(out_time, out_type, out_side, out_level, out_tseed,
                      out_watch if use_watch else None)


# ---------------------------------------------------------------------------
# Estimates and confidence intervals.

def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials == 0:
        return 0.0, 1.0
    p_hat = successes / trials
    z2n = z * z / trials
    denom = 1.0 + z2n
    center = (p_hat + z2n / 2.0) / denom
    margin = (z / denom) * math.sqrt(p_hat * (1.0 - p_hat) / trials
                                     + z * z / (4.0 * trials * trials))
    # clamp so the interval always contains p_hat despite rounding at 0/1
    lo = min(max(0.0, center - margin), p_hat)
    hi = max(min(1.0, center + margin), p_hat)
    return lo, hi


@dataclass
class EstimateResult:
    successes: int
    trials: int
    p_hat: float
    ci_low: float
    ci_high: float
    wall_time: float = 0.0
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_counts(cls, successes: int, trials: int, z: float = 1.96,
                    wall_time: float = 0.0, **metadata) -> "EstimateResult":
        lo, hi = wilson_interval(successes, trials, z)
        return cls(successes, trials, successes / trials, lo, hi, wall_time,
                   dict(metadata, z=z))

    def to_dict(self, include_wall_time: bool = False) -> dict:
        d = {
            "successes": self.successes, "trials": self.trials,
            "p_hat": self.p_hat, "ci_low": self.ci_low, "ci_high": self.ci_high,
            "metadata": self.metadata,
        }
        if include_wall_time:
            d["wall_time"] = self.wall_time
        return d


@dataclass
class TrialPlan:
    graph_spec: dict
    mu: float
    lam: float
    trials: int
    master_seed: int
    estimand: dict
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidParameterError("trials must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "TrialPlan":
        return cls(graph_spec=d["graph"], mu=d["mu"], lam=d["lambda"],
                   trials=d["trials"], master_seed=d["master_seed"],
                   estimand=d["estimand"], workers=d.get("workers", 1))


def _resolve_landmark(g: Graph, name: str) -> int:
    if name not in g.landmarks:
        raise InvalidParameterError(f"graph has no landmark {name!r}")
    return g.landmarks[name]


def _event_successes(batch: TrialBatch, estimand: dict) -> np.ndarray:
    kind = estimand["event"]
    if kind == "target_type":
        want = PTYPE_FPP1 if estimand["ptype"] == "FPP1" else PTYPE_FPPLAMBDA
        return batch.target_type == want
    if kind == "target_time_le":
        return batch.target_time <= estimand["threshold"]
    if kind == "target_time_ge":
        return batch.target_time >= estimand["threshold"]
    if kind == "target_fpp1_nonseed":
        return (batch.target_type == PTYPE_FPP1) & ~batch.target_is_seed
    raise InvalidParameterError(f"unknown event kind {kind!r}")


def estimate_event(plan: TrialPlan, z: float = 1.96,
                   audit: bool = False) -> EstimateResult:
    """Estimate the probability of the plan's named event with a Wilson CI."""
    g = graph_from_spec(plan.graph_spec)
    origin = _resolve_landmark(g, plan.estimand.get("origin", "O"))
    target = _resolve_landmark(g, plan.estimand["target"])
    t0 = time.perf_counter()
    batch = run_trials(g, origin, plan.mu, plan.lam, plan.trials,
                       plan.master_seed, target=target, workers=plan.workers)
    successes = _event_successes(batch, plan.estimand)
    result = EstimateResult.from_counts(
        int(successes.sum()), plan.trials, z,
        wall_time=time.perf_counter() - t0,
        graph=plan.graph_spec, mu=plan.mu, **{"lambda": plan.lam},
        master_seed=plan.master_seed, estimand=plan.estimand)
    if audit:
        result.metadata["trial_successes"] = successes.astype(int).tolist()
    return result


# ---------------------------------------------------------------------------
# Tile sweep.

@dataclass
class SweepRow:
    mu: float
    lam: float
    result: EstimateResult
    upper_wins: int
    lower_wins: int
    seed_level_hist: dict[int, int]

    def to_dict(self) -> dict:
        return {
            "mu": self.mu, "lambda": self.lam,
            "estimand": "target-reached-by-rate-1",
            **self.result.to_dict(),
            "upper_wins": self.upper_wins, "lower_wins": self.lower_wins,
            "seed_level_hist": {str(k): v for k, v in sorted(self.seed_level_hist.items())},
        }


@dataclass
class SweepReport:
    lam: float
    tile: dict
    trials: int
    master_seed: int
    rows: list[SweepRow]
    witnesses: list[dict]
    monotone_within_noise: bool

    def to_jsonl(self) -> str:
        lines = [json.dumps(r.to_dict(), sort_keys=True) for r in self.rows]
        lines.append(json.dumps({
            "summary": {"lambda": self.lam, "tile": self.tile,
                        "trials": self.trials, "master_seed": self.master_seed,
                        "witnesses": self.witnesses,
                        "monotone_within_noise": self.monotone_within_noise},
        }, sort_keys=True))
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        out = ["mu,lambda,estimand,p_hat,ci_low,ci_high,trials,successes,seed"]
        for r in self.rows:
            out.append(f"{r.mu},{r.lam},target-reached-by-rate-1,{r.result.p_hat},"
                       f"{r.result.ci_low},{r.result.ci_high},{r.result.trials},"
                       f"{r.result.successes},{self.master_seed}")
        return "\n".join(out) + "\n"


def two_proportion_z(s1: int, n1: int, s2: int, n2: int) -> float:
    """Pooled two-sample z statistic for p1 - p2."""
    p = (s1 + s2) / (n1 + n2)
    var = p * (1.0 - p) * (1.0 / n1 + 1.0 / n2)
    if var == 0:
        return 0.0
    return (s1 / n1 - s2 / n2) / math.sqrt(var)


def _monotonicity_analysis(rows: list[SweepRow], z_threshold: float):
    """Significant steps between adjacent mu values; a non-monotone witness
    is a significant step in each direction."""
    steps = []
    for a, b in zip(rows, rows[1:]):
        z = two_proportion_z(a.result.successes, a.result.trials,
                             b.result.successes, b.result.trials)
        steps.append({"mu_from": a.mu, "mu_to": b.mu, "z": z})
    sig_up = [s for s in steps if s["z"] < -z_threshold]    # p increased with mu
    sig_down = [s for s in steps if s["z"] > z_threshold]   # p decreased with mu
    witnesses = []
    if sig_up and sig_down:
        witnesses = [{"kind": "non-monotone", "threshold_z": z_threshold,
                      "increasing_steps": sig_up, "decreasing_steps": sig_down}]
    monotone = len(sig_up) == 0  # no significant increase of p_hat with mu
    return witnesses, monotone, steps


def tile_sweep(p: TileParams, lam: float, mu_list, trials: int,
               master_seed: int, workers: int = 1, z: float = 1.96,
               witness_z: float = 3.0) -> SweepReport:
    """Per mu: probability that the tail vertex B is taken by the rate-1 type,
    with winner-side split and winning-seed level histogram."""
    if not mu_list:
        raise InvalidParameterError("mu_list must be nonempty")
    g = build_tile(p)
    origin = g.landmarks["O"]
    target = g.landmarks["B"]
    rows = []
    for mu in mu_list:
        t0 = time.perf_counter()
        batch = run_trials(g, origin, mu, lam, trials, master_seed,
                           target=target, workers=workers)
        fpp1 = batch.target_type == PTYPE_FPP1
        res = EstimateResult.from_counts(
            int(fpp1.sum()), trials, z, wall_time=time.perf_counter() - t0,
            mu=mu, **{"lambda": lam}, master_seed=master_seed,
            tile={"D": p.D, "L": p.L, "H": p.H, "R": p.R})
        levels, counts = np.unique(batch.winning_seed_level[batch.winning_seed_level >= 0],
                                   return_counts=True)
        rows.append(SweepRow(
            mu=mu, lam=lam, result=res,
            upper_wins=int(np.sum(batch.target_side == ROLE_UPPER)),
            lower_wins=int(np.sum(batch.target_side == ROLE_LOWER)),
            seed_level_hist={int(l): int(c) for l, c in zip(levels, counts)},
        ))
    witnesses, monotone, _ = _monotonicity_analysis(rows, witness_z)
    return SweepReport(lam=lam, tile={"D": p.D, "L": p.L, "H": p.H, "R": p.R},
                       trials=trials, master_seed=master_seed, rows=rows,
                       witnesses=witnesses, monotone_within_noise=monotone)


# ---------------------------------------------------------------------------
# Side-restricted events.

def restricted_events(p: TileParams, side: str, mu: float, lam: float,
                      thresholds, trials: int, master_seed: int,
                      workers: int = 1, z: float = 1.96) -> dict[str, EstimateResult]:
    """On one side of the tile: P(passage time O->B <= threshold) for each
    supplied threshold, the probability that B is taken by the rate-1 type
    without hosting a seed, and the probability that the side's cap vertex
    (W_up or W_low) is taken by the rate-1 type."""
    g = restrict_to_side(build_tile(p), side)
    origin = g.landmarks["O"]
    target = g.landmarks["B"]
    batch = run_trials(g, origin, mu, lam, trials, master_seed,
                       target=target, workers=workers)
    results: dict[str, EstimateResult] = {}
    common = {"mu": mu, "lambda": lam, "side": side, "master_seed": master_seed}
    for thr in thresholds:
        n_ok = int(np.sum(batch.target_time <= thr))
        results[f"time_le_{thr:g}"] = EstimateResult.from_counts(
            n_ok, trials, z, threshold=thr, **common)
    b_ok = int(np.sum((batch.target_type == PTYPE_FPP1) & ~batch.target_is_seed))
    results["b_event"] = EstimateResult.from_counts(b_ok, trials, z, **common)

    cap_name = "W_up" if side == "upper" else "W_low"
    cap_batch = run_trials(g, origin, mu, lam, trials, master_seed,
                           target=g.landmarks[cap_name], workers=workers)
    results["cap_fpp1"] = EstimateResult.from_counts(
        int(np.sum(cap_batch.target_type == PTYPE_FPP1)), trials, z,
        cap=cap_name, **common)
    return results


# ---------------------------------------------------------------------------
# Survival proxy on the truncated tile-tree.

@dataclass
class SurvivalProxyResult:
    direct: EstimateResult
    p_tile: EstimateResult
    approx_reach: float
    gap: float

    def to_dict(self) -> dict:
        return {"direct": self.direct.to_dict(),
                "p_tile": self.p_tile.to_dict(),
                "approx_reach": self.approx_reach, "gap": self.gap}


def gw_reach_probability(phi: int, p_edge: float, depth: int) -> float:
    """P(a phi-ary tree percolated with parameter p_edge reaches depth k)."""
    reach = 1.0
    for _ in range(depth):
        reach = 1.0 - (1.0 - p_edge * reach) ** phi
    return reach


def survival_proxy(phi: int, depth: int, p: TileParams, mu: float, lam: float,
                   trials: int, master_seed: int, workers: int = 1,
                   z: float = 1.96) -> SurvivalProxyResult:
    """Direct estimate of {rate-1 type reaches a depth-k junction of the
    tile-tree} next to the independent-tile percolation approximation."""
    g = build_tile_tree(phi, depth, p)
    origin = g.landmarks["o"]
    watch = np.asarray(g.generation == depth)  # only junctions carry depth tags
    t0 = time.perf_counter()
    batch = run_trials(g, origin, mu, lam, trials, master_seed,
                       watch=watch, workers=workers)
    direct = EstimateResult.from_counts(
        int(batch.watch_hit.sum()), trials, z,
        wall_time=time.perf_counter() - t0,
        phi=phi, depth=depth, mu=mu, **{"lambda": lam}, master_seed=master_seed)

    tile = build_tile(p)
    tb = run_trials(tile, tile.landmarks["O"], mu, lam, trials, master_seed,
                    target=tile.landmarks["B"], workers=workers)
    p_tile = EstimateResult.from_counts(
        int(np.sum(tb.target_type == PTYPE_FPP1)), trials, z,
        mu=mu, **{"lambda": lam}, master_seed=master_seed)
    approx = gw_reach_probability(phi, p_tile.p_hat, depth)
    return SurvivalProxyResult(direct, p_tile, approx, direct.p_hat - approx)


# ---------------------------------------------------------------------------
# Wilson coverage self-test.

@dataclass
class CoverageReport:
    coverage: float
    trials_outer: int
    trials_inner: int
    p_true: float
    z: float

    def to_dict(self) -> dict:
        return {"coverage": self.coverage, "trials_outer": self.trials_outer,
                "trials_inner": self.trials_inner, "p_true": self.p_true, "z": self.z}


def ci_selftest(trials_outer: int, trials_inner: int, p_true: float,
                master_seed: int, z: float = 1.96) -> CoverageReport:
    """Fraction of Wilson intervals covering p_true over synthetic Bernoulli runs."""
    if not (0.0 <= p_true <= 1.0):
        raise InvalidParameterError("p_true must be in [0,1]")
    rng = np.random.Generator(np.random.Philox(key=master_seed))
    successes = rng.binomial(trials_inner, p_true, size=trials_outer)
    covered = 0
    for s in successes:
        lo, hi = wilson_interval(int(s), trials_inner, z)
        covered += lo <= p_true <= hi
    return CoverageReport(covered / trials_outer, trials_outer, trials_inner, p_true, z)
