import math

import numpy as np
import pytest
from scipy import stats

from fpphe.analytics import GwSpec, gw_extinction
from fpphe.brwdiag import (MinPassageSamples, extinction_frequency,
                           fit_concentration, generation_birth_stats,
                           inverse_size_rate, min_passage, sample_brw)
from fpphe.errors import (InvalidParameterError, ResourceCapError,
                          UnstableEstimateError)


def test_sample_brw_degenerate_cases():
    for s in sample_brw(GwSpec(2, 1.0), 1.0, 3, 20, master_seed=1):
        assert s.generation_sizes[1] == 0
    for s in sample_brw(GwSpec(2, 0.0), 1.0, 5, 5, master_seed=2):
        assert s.generation_sizes == [2 ** j for j in range(6)]
        assert s.survived_to == 5


def test_sample_brw_mean_growth():
    spec = GwSpec(2, 0.25)
    samples = sample_brw(spec, 1.0, 5, 4000, master_seed=3)
    n5 = np.array([s.generation_sizes[5] if len(s.generation_sizes) > 5 else 0
                   for s in samples])
    expect = 1.5 ** 5
    assert abs(n5.mean() - expect) < 3 * n5.std() / math.sqrt(len(n5))


def test_sample_brw_birth_times_increase():
    for s in sample_brw(GwSpec(3, 0.2), 2.0, 4, 10, master_seed=4):
        for j in range(1, s.survived_to + 1):
            assert s.birth_times[j].min() > s.birth_times[j - 1].min()


def test_sample_brw_validation_and_cap():
    with pytest.raises(InvalidParameterError):
        sample_brw(GwSpec(2, 0.1), 1.0, 0, 1, master_seed=1)
    with pytest.raises(InvalidParameterError):
        sample_brw(GwSpec(2, 0.1), 0.0, 3, 1, master_seed=1)
    with pytest.raises(ResourceCapError):
        sample_brw(GwSpec(3, 0.0), 1.0, 20, 1, master_seed=1, cap=1000)


def test_min_passage_basic():
    spec = GwSpec(2, 0.25)
    samples = min_passage(spec, 1.0, 10, 2000, master_seed=5)
    assert samples.kept + samples.discarded_extinct == 2000
    assert np.all(samples.values >= 0)
    # min over many root-to-level paths is below the single-path Gamma mean
    assert samples.values.mean() <= 10.0


def test_min_passage_conditioning_matches_extinction():
    spec = GwSpec(2, 0.25)
    samples = min_passage(spec, 1.0, 20, 3000, master_seed=6)
    f = gw_extinction(spec)
    frac = samples.discarded_extinct / 3000
    sigma = math.sqrt(f * (1 - f) / 3000)
    assert abs(frac - f) < 3 * sigma + 0.01


def test_min_passage_front_speed_stabilizes():
    # the mean front speed has O(log n / n) corrections, so adjacent levels
    # in desk range agree to about ten percent
    spec = GwSpec(2, 0.25)
    m16 = min_passage(spec, 1.0, 16, 2000, master_seed=7).values.mean() / 16
    m24 = min_passage(spec, 1.0, 24, 2000, master_seed=8).values.mean() / 24
    assert abs(m16 - m24) / m24 < 0.10


def test_min_passage_validation():
    with pytest.raises(InvalidParameterError):
        min_passage(GwSpec(2, 0.6), 1.0, 5, 100, master_seed=1)
    with pytest.raises(InvalidParameterError):
        min_passage(GwSpec(2, 0.25), 1.0, 0, 100, master_seed=1)


def test_fit_concentration_exponential():
    rng = np.random.default_rng(5)
    vals = rng.exponential(size=20000)
    _, delta = fit_concentration(MinPassageSamples(1.0, 5, vals, 0))
    assert abs(delta - 1.0) < 0.15
    _, delta2 = fit_concentration(MinPassageSamples(1.0, 5, 2 * vals, 0))
    assert abs(delta2 - delta / 2) < 0.08


def test_fit_concentration_gaussian_faster_than_exponential():
    rng = np.random.default_rng(6)
    _, delta = fit_concentration(
        MinPassageSamples(1.0, 5, rng.normal(size=20000), 0))
    assert delta > 1.5


def test_fit_concentration_validation():
    with pytest.raises(InvalidParameterError):
        fit_concentration(MinPassageSamples(1.0, 5, np.ones(100), 0))
    with pytest.raises(InvalidParameterError):
        fit_concentration(MinPassageSamples(1.0, 5, np.ones(2000), 0))


def test_generation_birth_stats():
    rows = generation_birth_stats(GwSpec(1, 0.0), 100.0, 6, 200, master_seed=9)
    for r in rows:
        assert r.prob_all_born_in_time == 1.0
        assert r.mean_late_free_count <= r.mean_generation_size + 1e-12
    rows = generation_birth_stats(GwSpec(2, 0.25), 10.0, 10, 2000, master_seed=10)
    for r in rows:
        if r.trials_alive == 0:
            continue
        sigma = math.sqrt(0.25 / r.trials_alive)
        assert r.prob_all_born_in_time >= r.claimed_lower_bound - 3 * sigma
        assert r.mean_late_free_count <= r.mean_generation_size + 1e-12
    with pytest.raises(InvalidParameterError):
        generation_birth_stats(GwSpec(2, 0.25), 0.0, 5, 10, master_seed=1)


def test_inverse_size_rate_deterministic_case():
    res = inverse_size_rate(GwSpec(2, 0.0), 10, 50, master_seed=11)
    for n, rate in enumerate(res.rates, start=1):
        assert rate == pytest.approx(-math.log(2.0))
    assert res.theoretical_limit == pytest.approx(-math.log(2.0))


def test_inverse_size_rate_validation():
    with pytest.raises(InvalidParameterError):
        inverse_size_rate(GwSpec(2, 0.6), 5, 100, master_seed=1)


def test_extinction_frequency_matches_gw():
    spec = GwSpec(2, 0.25)
    freq = extinction_frequency(spec, 5000, master_seed=12)
    f = gw_extinction(spec)
    assert abs(freq - f) < 3 * math.sqrt(f * (1 - f) / 5000) + 0.005


def test_min_passage_agrees_with_simulator_on_capped_tree():
    # the seed-free cluster growth and an edge-weighted tree race have the
    # same minimum-birth-time law at a given level
    from fpphe.graphkit import build_complete_tree
    from fpphe.rng import generator_for_trial
    from fpphe.seeding import no_seeds
    from fpphe.simcore import StopCondition, simulate
    spec = GwSpec(2, 0.0)  # no seeds so every branch survives
    n = 6
    direct = min_passage(spec, 1.0, n, 1500, master_seed=13).values
    tree = build_complete_tree(2, n)
    leaves = tree.generation == n
    times = np.empty(1500)
    for t in range(1500):
        out = simulate(tree, 0, no_seeds(tree), 1.0,
                       StopCondition(max_infected=tree.vertex_count),
                       generator_for_trial(15, t))
        times[t] = out.times[leaves].min()
    assert stats.ks_2samp(direct, times).pvalue > 0.01
