"""Empirical diagnostics for the continuous-time branching random walk that
mirrors the rate-1 infection on a seeded tree.

An individual = a vertex reached by the rate-1 type; offspring per individual
is Binomial(d, 1-mu) (children that do not host a seed), and each birth adds
an independent Exp(gamma) increment to the parent's birth time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analytics import GwSpec, inverse_size_rate_limit
from .errors import InvalidParameterError, ResourceCapError, UnstableEstimateError
from .rng import generator_for_trial

DEFAULT_INDIVIDUAL_CAP = 20_000_000


@dataclass
class BrwSample:
    """One realized tree: sizes N_0..N_max, birth times per generation, and
    the last generation reached before extinction (or max_gen)."""

    generation_sizes: list[int]
    birth_times: list[np.ndarray]
    survived_to: int


@dataclass
class MinPassageSamples:
    gamma: float
    level: int
    values: np.ndarray            # min birth time at the level, per surviving trial
    discarded_extinct: int
    spec: GwSpec | None = None

    @property
    def kept(self) -> int:
        return len(self.values)


def _grow_times(spec: GwSpec, gamma: float, max_gen: int,
                rng: np.random.Generator, cap: int) -> BrwSample:
    """Grow one tree with birth times, generation by generation."""
    times = [np.zeros(1)]
    sizes = [1]
    total = 1
    scale = 1.0 / gamma
    for _ in range(max_gen):
        parents = times[-1]
        if parents.size == 0:
            break
        offspring = rng.binomial(spec.d, 1.0 - spec.mu, size=parents.size)
        n_children = int(offspring.sum())
        total += n_children
        if total > cap:
            raise ResourceCapError(f"tree exceeded {cap} individuals")
        children = np.repeat(parents, offspring) + rng.exponential(scale, size=n_children)
        times.append(children)
        sizes.append(n_children)
    survived_to = len(sizes) - 1 if sizes[-1] > 0 else len(sizes) - 2
    return BrwSample(sizes, times, max(survived_to, 0))


def sample_brw(spec: GwSpec, gamma: float, max_gen: int, trials: int,
               master_seed: int, cap: int = DEFAULT_INDIVIDUAL_CAP) -> list[BrwSample]:
    if max_gen < 1:
        raise InvalidParameterError("max_gen must be >= 1")
    if gamma <= 0:
        raise InvalidParameterError("gamma must be positive")
    return [_grow_times(spec, gamma, max_gen, generator_for_trial(master_seed, t), cap)
            for t in range(trials)]


def min_passage(spec: GwSpec, gamma: float, n: int, trials: int,
                master_seed: int, cap: int = DEFAULT_INDIVIDUAL_CAP) -> MinPassageSamples:
    """Minimum birth time at generation n, conditioned on survival to n by
    rejection (extinct runs are discarded and counted)."""
    if spec.mean_offspring <= 1.0:
        raise InvalidParameterError("min_passage needs a supercritical spec")
    if n < 1:
        raise InvalidParameterError("n must be >= 1")
    values = []
    discarded = 0
    for t in range(trials):
        sample = _grow_times(spec, gamma, n, generator_for_trial(master_seed, t), cap)
        if sample.survived_to >= n:
            values.append(float(sample.birth_times[n].min()))
        else:
            discarded += 1
    if trials >= 100 and discarded / trials > 0.99:
        raise UnstableEstimateError(
            f"extinction rate {discarded/trials:.3f} > 0.99; conditioning unstable")
    return MinPassageSamples(gamma, n, np.array(values), discarded, spec)


def fit_concentration(samples: MinPassageSamples,
                      min_tail_count: int = 30,
                      trim_fraction: float = 0.01,
                      tail_start: float = 0.1) -> tuple[float, float]:
    """Least-squares fit of ln P(|M - mean| > alpha) ~ ln C - delta * alpha.

    The fit runs over an evenly spaced alpha grid in the tail region, from
    where the empirical tail drops below `tail_start` up to where it still
    holds `min_tail_count` samples (the extreme `trim_fraction` is dropped).
    Returns (C_hat, delta_hat).
    """
    vals = samples.values
    if len(vals) < 1000:
        raise InvalidParameterError("need at least 10^3 samples")
    dev = np.sort(np.abs(vals - vals.mean()))
    if dev[-1] == dev[0]:
        raise InvalidParameterError("fit undefined: all samples equal")
    n = len(dev)
    keep_hi = n - max(min_tail_count, int(math.ceil(trim_fraction * n)))
    alpha_lo = dev[int((1.0 - tail_start) * n)]
    alpha_hi = dev[keep_hi]
    if not alpha_hi > alpha_lo:
        raise InvalidParameterError("fit undefined: degenerate tail range")
    grid = np.linspace(alpha_lo, alpha_hi, 100)
    tails = 1.0 - np.searchsorted(dev, grid, side="right") / n
    mask = tails > 0
    a, b = np.polyfit(grid[mask], np.log(tails[mask]), 1)
    return float(math.exp(b)), float(-a)


@dataclass
class GenerationBirthRow:
    generation: int
    trials_alive: int
    prob_all_born_in_time: float
    mean_late_free_count: float  # E[K_j]: individuals born within C1*j
    mean_generation_size: float
    claimed_lower_bound: float


def generation_birth_stats(spec: GwSpec, c1: float, max_gen: int, trials: int,
                           master_seed: int,
                           cap: int = DEFAULT_INDIVIDUAL_CAP) -> list[GenerationBirthRow]:
    """Per generation j: empirical P(entire generation born by c1*j | alive),
    E[K_j] (count born by c1*j), and the analytic lower bound
    1 - (1/c1) exp(-j*c1/2) for comparison."""
    if c1 <= 0:
        raise InvalidParameterError("c1 must be positive")
    all_in_time = np.zeros(max_gen + 1)
    k_sum = np.zeros(max_gen + 1)
    n_sum = np.zeros(max_gen + 1)
    alive = np.zeros(max_gen + 1, dtype=np.int64)
    for t in range(trials):
        sample = _grow_times(spec, gamma=1.0, max_gen=max_gen,
                             rng=generator_for_trial(master_seed, t), cap=cap)
        for j in range(min(len(sample.birth_times), max_gen + 1)):
            bt = sample.birth_times[j]
            if bt.size == 0:
                continue
            alive[j] += 1
            n_sum[j] += bt.size
            k = int(np.count_nonzero(bt <= c1 * j))
            k_sum[j] += k
            all_in_time[j] += float(k == bt.size)
    rows = []
    for j in range(1, max_gen + 1):
        rows.append(GenerationBirthRow(
            generation=j,
            trials_alive=int(alive[j]),
            prob_all_born_in_time=(all_in_time[j] / alive[j]) if alive[j] else math.nan,
            mean_late_free_count=(k_sum[j] / alive[j]) if alive[j] else math.nan,
            mean_generation_size=(n_sum[j] / alive[j]) if alive[j] else math.nan,
            claimed_lower_bound=1.0 - math.exp(-j * c1 / 2.0) / c1,
        ))
    return rows


@dataclass
class InverseSizeRateResult:
    rates: list[float]           # index n-1 -> (1/n) ln E[1/N_n | N_n > 0]
    theoretical_limit: float
    surviving_trials: list[int] = field(default_factory=list)


def inverse_size_rate(spec: GwSpec, n_max: int, trials: int,
                      master_seed: int) -> InverseSizeRateResult:
    """Empirical decay rate of E[1/N_n] over trials surviving to level n,
    alongside the analytic limit max{ln p1, -ln(d(1-mu))}.

    Uses generation sizes only (one Binomial draw per generation), so it
    scales to large n without materializing the trees.
    """
    if spec.mean_offspring <= 1.0:
        raise InvalidParameterError("spec must be supercritical")
    inv_sum = np.zeros(n_max)
    alive = np.zeros(n_max, dtype=np.int64)
    p = 1.0 - spec.mu
    for t in range(trials):
        rng = generator_for_trial(master_seed, t)
        size = 1
        for n in range(1, n_max + 1):
            size = int(rng.binomial(size * spec.d, p))
            if size == 0:
                break
            alive[n - 1] += 1
            inv_sum[n - 1] += 1.0 / size
    if alive[-1] == 0:
        raise UnstableEstimateError("no trial survived to n_max")
    rates = [math.log(inv_sum[n - 1] / alive[n - 1]) / n if alive[n - 1] else math.nan
             for n in range(1, n_max + 1)]
    return InverseSizeRateResult(rates, inverse_size_rate_limit(spec), alive.tolist())


def extinction_frequency(spec: GwSpec, trials: int, master_seed: int,
                         max_gen: int = 500, survive_size: int = 10_000) -> float:
    """Monte Carlo extinction frequency; a trial counts as surviving once the
    population exceeds `survive_size` or reaches `max_gen` generations (the
    escape probability from such a state is negligible)."""
    extinct = 0
    p = 1.0 - spec.mu
    for t in range(trials):
        rng = generator_for_trial(master_seed, t)
        size = 1
        for _ in range(max_gen):
            size = int(rng.binomial(size * spec.d, p))
            if size == 0:
                extinct += 1
                break
            if size >= survive_size:
                break
    return extinct / trials
