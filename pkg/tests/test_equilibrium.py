import math

import numpy as np
import pytest
import scipy.stats

from cliquedyn.equilibrium import (
    class_count,
    component_count_law,
    gem_expected_density,
    graph_pmf_corrected,
    med_pmf,
    med_to_gem_experiment,
    sample_gem,
    sample_med,
    sample_med_spectrum,
)
from cliquedyn.graphons import (
    TargetGraph,
    complete_component_targets,
    spectrum_subgraph_density,
)
from cliquedyn.graphs import (
    FrequencySpectrum,
    is_complete_components,
    spectrum_of_graph,
)
from cliquedyn.partitions import spectra
from cliquedyn.rng import stream

SPEC = FrequencySpectrum.from_dict


def test_med_pmf_examples():
    assert med_pmf(SPEC({1: 1}), 0.7) == pytest.approx(1.0)
    for mu in (0.3, 1.0, 4.0):
        assert med_pmf(SPEC({1: 2}), mu) == pytest.approx(mu / (mu + 1))
        assert med_pmf(SPEC({2: 1}), mu) == pytest.approx(1 / (mu + 1))
    assert med_pmf(SPEC({1: 3}), 1.0) == pytest.approx(1 / 6)
    assert med_pmf(SPEC({1: 1, 2: 1}), 1.0) == pytest.approx(1 / 2)
    assert med_pmf(SPEC({3: 1}), 1.0) == pytest.approx(1 / 3)


def test_med_pmf_degenerate_mu_zero():
    assert med_pmf(SPEC({3: 1}), 0.0) == 1.0
    assert med_pmf(SPEC({1: 3}), 0.0) == 0.0


def test_med_pmf_sums_to_one():
    for n in (5, 12, 25, 40):
        for mu in (0.25, 1.0, 4.0):
            total = sum(med_pmf(nu, mu) for nu in spectra(n))
            assert total == pytest.approx(1.0, abs=1e-10)


def test_class_count_examples():
    assert class_count(SPEC({3: 1})) == 1
    assert class_count(SPEC({1: 1, 2: 1})) == 3
    assert class_count(SPEC({1: 3})) == 1
    assert class_count(SPEC({2: 2})) == 3
    for n in range(1, 8):
        for mu in (0.5, 1.0):
            total = sum(
                class_count(nu) * graph_pmf_corrected(nu, mu) for nu in spectra(n)
            )
            assert total == pytest.approx(1.0, abs=1e-12)


def test_component_count_law():
    assert np.allclose(component_count_law(1, 2.0), [0, 1])
    for mu in (0.4, 1.0, 3.0):
        pmf = component_count_law(2, mu)
        assert pmf[2] == pytest.approx(mu / (mu + 1))
    pmf = component_count_law(3, 1.0)
    mean = sum(c * p for c, p in enumerate(pmf))
    assert mean == pytest.approx(1 + 1 / 2 + 1 / 3)
    # matches the expectation computed through the Ewens pmf directly
    med_mean = sum(nu.n_blocks() * med_pmf(nu, 1.0) for nu in spectra(3))
    assert mean == pytest.approx(med_mean)


def test_component_count_is_pushforward_of_med():
    for n in (2, 5, 9, 12):
        for mu in (0.25, 1.0, 4.0):
            pmf = component_count_law(n, mu)
            grouped = np.zeros(n + 1)
            for nu in spectra(n):
                grouped[nu.n_blocks()] += med_pmf(nu, mu)
            assert np.allclose(pmf, grouped, atol=1e-12)


def test_sample_med_basics():
    g = sample_med(1, 1.0, seed=0)
    assert g.n == 1 and not g.edges
    hits = 0
    trials = 4000
    for rep in range(trials):
        g = sample_med(2, 1.0, seed=rep)
        hits += bool(g.edges)
    se = math.sqrt(0.25 / trials)
    assert hits / trials == pytest.approx(0.5, abs=4 * se)
    g = sample_med(30, 1.0, seed=5)
    assert is_complete_components(g)
    assert spectrum_of_graph(g).total == 30


def test_sample_med_spectrum_chi_squared():
    n, mu, samples = 5, 1.0, 100_000
    rng = stream(17, 0)
    counts: dict = {}
    for _ in range(samples):
        nu = sample_med_spectrum(n, mu, rng)
        counts[nu.key()] = counts.get(nu.key(), 0) + 1
    keys = [nu.key() for nu in spectra(n)]
    observed = np.array([counts.get(k, 0) for k in keys], dtype=float)
    expected = np.array([med_pmf(FrequencySpectrum(k, n), mu) for k in keys]) * samples
    _, pval = scipy.stats.chisquare(observed, expected)
    assert pval > 0.001


def test_gem_sampler_moments():
    mu = 1.5
    draws = 20_000
    rng = stream(23, 0)
    firsts = np.empty(draws)
    fourths = np.empty(draws)
    residual_after_3 = np.empty(draws)
    for i in range(draws):
        gem = sample_gem(mu, 1e-12, rng)
        firsts[i] = gem.weights[0]
        fourths[i] = gem.weights[3] if len(gem.weights) > 3 else 0.0
        residual_after_3[i] = 1.0 - sum(gem.weights[:3])
        assert abs(gem.residual - (1.0 - sum(gem.weights))) < 1e-9
    for arr, expect in (
        (firsts, 1 / (1 + mu)),
        (fourths, mu ** 3 / (1 + mu) ** 4),
        (residual_after_3, (mu / (1 + mu)) ** 3),
    ):
        se = arr.std(ddof=1) / math.sqrt(draws)
        assert arr.mean() == pytest.approx(expect, abs=4 * se)


def test_gem_requires_positive_mu():
    with pytest.raises(ValueError):
        sample_gem(0.0, 1e-8, seed=1)


def test_gem_ranked_view():
    gem = sample_gem(1.0, 1e-10, seed=9)
    ranked = gem.ranked()
    assert sorted(ranked, reverse=True) == list(ranked)
    assert set(ranked) == set(gem.weights)


def test_gem_expected_density_examples():
    for mu in (0.5, 1.0, 2.0):
        edge = TargetGraph.from_edges(2, [(1, 2)])
        assert gem_expected_density(edge, mu) == pytest.approx(1 / (1 + mu))
        path = TargetGraph.from_edges(3, [(1, 2), (2, 3)])
        assert gem_expected_density(path, mu) == 0.0
        k3 = TargetGraph.complete(3)
        assert gem_expected_density(k3, mu) == pytest.approx(2 / ((1 + mu) * (2 + mu)))


def test_sampling_consistency_exact_summation():
    # expected pattern density of the finite equilibrium graph is
    # size-independent: sum_nu pmf(nu) density(nu, F) equals the limit value
    # for every n >= k, verified by exhaustive summation
    for mu in (0.5, 1.0, 3.0):
        for k in (2, 3, 4):
            for f in complete_component_targets(k):
                expect = gem_expected_density(f, mu)
                for n in range(k, 8):
                    total = sum(
                        med_pmf(nu, mu) * spectrum_subgraph_density(nu, f)
                        for nu in spectra(n)
                    )
                    assert total == pytest.approx(expect, abs=1e-12)


def test_med_to_gem_experiment_rows():
    rows = med_to_gem_experiment(1.0, [10, 40], 2, replicates=1500, seed=5)
    edge_rows = [r for r in rows if r.target_key == "k2:1"]
    assert len(edge_rows) == 2
    for r in edge_rows:
        assert r.exact_limit == pytest.approx(0.5)
        assert abs(r.gap) <= 4.5 * r.stderr
        # the i.i.d. (grapheme) estimate carries the repeat-collision bias
        assert r.estimate_iid == pytest.approx(
            (r.n + 1) / (2 * r.n), abs=4.5 * r.stderr_iid
        )
