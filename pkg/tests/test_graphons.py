import itertools
import math

import numpy as np
import pytest
import scipy.stats

from cliquedyn.equilibrium import sample_gem
from cliquedyn.graphons import (
    BlockGraphon,
    ConstantGraphon,
    StepGraphon,
    TargetGraph,
    all_targets,
    block_subgraphon_density,
    complete_component_targets,
    constant_subgraphon_density,
    density_basis_change,
    entropy_bound,
    entropy_diagnostic,
    graphon_from_record,
    graphon_of_complete_graph,
    graphon_to_record,
    homomorphism_density,
    partition_count,
    sample_graph,
    sample_pattern_counts,
    spectrum_subgraph_density,
    subgraph_density,
    subgraph_density_mc,
    subgraphon_density,
)
from cliquedyn.graphs import (
    FrequencySpectrum,
    LabeledGraph,
    is_complete_components,
    isomorphism_key,
    spectrum_of_graph,
)
from cliquedyn.partitions import labeled_graph_count, spectra
from cliquedyn.rng import stream
from tests.test_graphs import all_graphs

EDGE2 = TargetGraph.from_edges(2, [(1, 2)])
TRI = TargetGraph.complete(3)


def test_sample_graph_trivial_cases():
    assert len(sample_graph(ConstantGraphon(1.0), 5, seed=1).edges) == 10
    assert not sample_graph(ConstantGraphon(0.0), 5, seed=1).edges
    g = sample_graph(BlockGraphon((1.0,)), 5, seed=2)
    assert len(g.edges) == 10


def test_subgraph_density_examples():
    k5 = LabeledGraph(5, frozenset(itertools.combinations(range(1, 6), 2)))
    assert subgraph_density(k5, TargetGraph.complete(3)) == 1.0
    assert subgraph_density(k5, TargetGraph.from_edges(3, [(1, 2)])) == 0.0
    one_edge = LabeledGraph(3, frozenset({(1, 2)}))
    assert subgraph_density(one_edge, EDGE2) == pytest.approx(1 / 3)


def test_density_pattern_too_large_warns():
    with pytest.warns(UserWarning):
        assert subgraph_density(LabeledGraph(2), TRI) == 0.0


def test_homomorphism_density_examples():
    k3 = LabeledGraph(3, frozenset({(1, 2), (1, 3), (2, 3)}))
    assert homomorphism_density(k3, EDGE2) == 1.0
    assert homomorphism_density(LabeledGraph(3), EDGE2) == 0.0
    one_edge = LabeledGraph(3, frozenset({(1, 2)}))
    assert homomorphism_density(one_edge, EDGE2) == pytest.approx(1 / 3)


def test_density_mc_agrees_with_exact():
    g = LabeledGraph(8, frozenset({(1, 2), (2, 3), (4, 5), (6, 7), (1, 3)}))
    f = TargetGraph.from_edges(3, [(1, 2)])
    exact = subgraph_density(g, f)
    est, se = subgraph_density_mc(g, f, samples=20_000, seed=3)
    assert est == pytest.approx(exact, abs=4.5 * se)


def test_density_basis_change_examples():
    combo = density_basis_change(EDGE2)
    assert len(combo) == 1 and combo[0][1] == 1
    empty2 = TargetGraph.empty(2)
    combo = density_basis_change(empty2)
    assert sorted(c for (_, c) in combo) == [-1, 1]


def test_density_basis_change_numeric_identity():
    rng = stream(12, 0)
    graphs = []
    for _ in range(50):
        n = int(rng.integers(3, 9))
        pairs = list(itertools.combinations(range(1, n + 1), 2))
        edges = [p for p in pairs if rng.random() < 0.4]
        graphs.append(LabeledGraph(n, frozenset(edges)))
    targets = all_targets(2) + all_targets(3)
    for g in graphs:
        for f in targets:
            lhs = subgraph_density(g, f)
            rhs = sum(
                coeff * homomorphism_density(g, sup)
                for (sup, coeff) in density_basis_change(f)
            )
            assert lhs == pytest.approx(rhs, abs=1e-12)
    # spot-check the identity on four-vertex patterns too
    dense_targets = [t for t in all_targets(4) if t.edge_count() >= 4][:6]
    for g in graphs[:10]:
        for f in dense_targets:
            lhs = subgraph_density(g, f)
            rhs = sum(
                coeff * homomorphism_density(g, sup)
                for (sup, coeff) in density_basis_change(f)
            )
            assert lhs == pytest.approx(rhs, abs=1e-12)


def test_block_density_examples():
    assert block_subgraphon_density(BlockGraphon((1.0,)), TargetGraph.complete(4)) == 1.0
    w = BlockGraphon((2 / 3, 1 / 3))
    assert block_subgraphon_density(w, EDGE2) == pytest.approx(5 / 9)
    dusty = BlockGraphon((0.5,))
    assert block_subgraphon_density(dusty, TargetGraph.empty(2)) == pytest.approx(0.75)
    # non-clique patterns have density zero
    path = TargetGraph.from_edges(3, [(1, 2), (2, 3)])
    assert block_subgraphon_density(w, path) == 0.0


def test_block_density_matches_sampling_chi_squared():
    fixtures = [
        BlockGraphon((2 / 3, 1 / 3)),
        BlockGraphon((0.5, 0.2)),
        BlockGraphon(sample_gem(1.0, 1e-10, seed=4).ranked()),
    ]
    samples = 100_000
    for fi, w in enumerate(fixtures):
        counts = sample_pattern_counts(w, 3, samples, seed=60 + fi)
        keys = [t.key() for t in complete_component_targets(3)]
        expected = np.array(
            [block_subgraphon_density(w, t) for t in complete_component_targets(3)]
        )
        observed = np.array([counts.get(k, 0) for k in keys], dtype=float)
        assert observed.sum() == samples  # only clique patterns can occur
        assert np.all(observed[expected == 0.0] == 0)
        live = expected > 0.0
        _, pval = scipy.stats.chisquare(
            observed[live], expected[live] / expected[live].sum() * samples
        )
        assert pval > 0.001


def test_block_density_sums_to_one_over_all_patterns():
    for w in (
        BlockGraphon((0.6, 0.4)),
        BlockGraphon((0.5, 0.25)),
        BlockGraphon((0.9,)),
    ):
        for k in (2, 3, 4):
            total = 0.0
            for nu in spectra(k):
                t = _canonical_target(nu)
                total += labeled_graph_count(nu) * block_subgraphon_density(w, t)
            assert total == pytest.approx(1.0, abs=1e-12)


def _canonical_target(nu: FrequencySpectrum) -> TargetGraph:
    edges = []
    start = 1
    for size in nu.sizes():
        edges.extend(itertools.combinations(range(start, start + size), 2))
        start += size
    return TargetGraph.from_edges(nu.total, edges)


def test_constant_density_examples():
    for k in (2, 3, 4):
        for f in (TargetGraph.complete(k), TargetGraph.empty(k)):
            assert constant_subgraphon_density(0.5, f) == pytest.approx(
                2.0 ** -(k * (k - 1) / 2)
            )
    assert constant_subgraphon_density(1.0, TargetGraph.complete(4)) == 1.0
    assert constant_subgraphon_density(0.3, EDGE2) == pytest.approx(0.3)
    total = sum(constant_subgraphon_density(0.37, f) for f in all_targets(3))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_densities_sum_to_one_for_every_representation():
    reps = [
        ConstantGraphon(0.42),
        BlockGraphon((0.5, 0.2)),
        StepGraphon(LabeledGraph(4, frozenset({(1, 2), (2, 3)}))),
    ]
    for w in reps:
        for k in (2, 3):
            total = sum(subgraphon_density(w, f) for f in all_targets(k))
            assert total == pytest.approx(1.0, abs=1e-12)


def test_spectrum_density_matches_brute_force():
    # closed-form clique-component density vs exhaustive injection counting
    for n in (3, 4, 5, 6):
        cliquey = [g for g in all_graphs(n) if is_complete_components(g)]
        targets = all_targets(2) + all_targets(3)
        for g in cliquey:
            nu = spectrum_of_graph(g)
            for f in targets:
                assert spectrum_subgraph_density(nu, f) == pytest.approx(
                    subgraph_density(g, f), abs=1e-12
                )


def test_step_graphon_density_consistency():
    g = LabeledGraph(4, frozenset({(1, 2), (3, 4)}))
    w = StepGraphon(g)
    # two i.i.d. atoms are adjacent iff distinct and joined: 4/16 pairs
    assert subgraphon_density(w, EDGE2) == pytest.approx(0.25)
    counts: dict = {}
    rng = stream(77, 0)
    samples = 20_000
    for _ in range(samples):
        key = "".join(
            "1" if e == 1.0 else "0"
            for e in [subgraph_density(sample_graph(w, 2, rng), EDGE2)]
        )
        counts[key] = counts.get(key, 0) + 1
    est = counts.get("1", 0) / samples
    assert est == pytest.approx(0.25, abs=4.5 * math.sqrt(0.25 * 0.75 / samples))


def test_graphon_of_complete_graph():
    tri = LabeledGraph(3, frozenset({(1, 2), (1, 3), (2, 3)}))
    assert graphon_of_complete_graph(tri).block_sizes == (1.0,)
    one_edge = LabeledGraph(3, frozenset({(1, 2)}))
    assert graphon_of_complete_graph(one_edge).block_sizes == pytest.approx(
        (2 / 3, 1 / 3)
    )
    empty4 = LabeledGraph(4)
    assert graphon_of_complete_graph(empty4).block_sizes == (0.25,) * 4
    with pytest.raises(ValueError):
        graphon_of_complete_graph(LabeledGraph(3, frozenset({(1, 2), (2, 3)})))


def test_entropy_examples():
    for k in (2, 4, 6):
        rep = entropy_diagnostic(BlockGraphon((1.0,)), k)
        assert rep.entropy == 0.0
    for k in range(3, 8):
        rep = entropy_diagnostic(ConstantGraphon(0.5), k)
        assert rep.entropy == pytest.approx(k * (k - 1) / 2 * math.log(2), abs=1e-12)
    gem = BlockGraphon(sample_gem(1.0, 1e-10, seed=8).ranked())
    for k in (4, 5, 6, 7):
        rep = entropy_diagnostic(gem, k)
        assert rep.entropy <= entropy_bound(k)


def test_entropy_separation_trend():
    # normalized block entropy shrinks with k while the constant-1/2 level
    # stays bounded away from zero
    gem = BlockGraphon(sample_gem(1.0, 1e-10, seed=8).ranked())
    block_norms = [entropy_diagnostic(gem, k).normalized for k in (4, 5, 6, 7)]
    bounds = [entropy_bound(k) / k ** 2 for k in (4, 5, 6, 7)]
    assert all(b <= c for b, c in zip(block_norms, bounds))
    assert all(bounds[i + 1] < bounds[i] for i in range(3))
    const_norms = [entropy_diagnostic(ConstantGraphon(0.5), k).normalized for k in (4, 5, 6, 7)]
    assert all(c >= 0.25 for c in const_norms)
    assert const_norms[-1] > block_norms[-1]


def test_entropy_step_mc_plugin():
    g = LabeledGraph(3, frozenset({(1, 2)}))
    w = StepGraphon(g)
    rep = entropy_diagnostic(w, 2, samples=20_000, seed=3)
    # exact two-point entropy of the step graphon
    p_edge = subgraphon_density(w, EDGE2)
    exact = -(p_edge * math.log(p_edge) + (1 - p_edge) * math.log(1 - p_edge))
    assert rep.entropy == pytest.approx(exact, abs=0.01)
    with pytest.raises(ValueError):
        entropy_diagnostic(w, 2)


def test_partition_count():
    assert partition_count(1)[0] == 1
    assert partition_count(5)[0] == 7
    assert partition_count(100)[0] == 190569292
    assert 0.9 <= partition_count(100)[1] <= 1.1
    # enumeration cross-check
    for k in (4, 6, 8):
        assert partition_count(k)[0] == len(spectra(k))


def test_isomorphism_iff_density_vector():
    # distinct classes are separated by the density of one of the two graphs,
    # while isomorphic graphs share all densities
    import itertools as it

    for n in (3, 4, 5):
        reps: dict = {}
        for g in all_graphs(n):
            reps.setdefault(isomorphism_key(g), g)
        classes = list(reps.values())
        for g1 in classes:
            f1 = TargetGraph.from_graph(g1)
            assert subgraph_density(g1, f1) > 0
            for g2 in classes:
                if g1 is g2:
                    continue
                assert subgraph_density(g2, f1) == 0.0 or subgraph_density(
                    g1, TargetGraph.from_graph(g2)
                ) == 0.0
    # relabelling changes no density at all
    rng = stream(31, 0)
    targets = all_targets(2) + all_targets(3)
    for n in (4, 5):
        for g in list(all_graphs(n))[:: 7]:
            perm = list(rng.permutation(n) + 1)
            h = LabeledGraph(
                n, frozenset((perm[u - 1], perm[v - 1]) for (u, v) in g.edges)
            )
            assert isomorphism_key(h) == isomorphism_key(g)
            for f in targets:
                assert subgraph_density(h, f) == pytest.approx(
                    subgraph_density(g, f), abs=1e-12
                )


def test_fixture_records_round_trip():
    fixtures = [
        BlockGraphon((0.5, 0.3)),
        StepGraphon(LabeledGraph(3, frozenset({(1, 2)}))),
        ConstantGraphon(0.4),
    ]
    for w in fixtures:
        rec = graphon_to_record(w)
        back = graphon_from_record(rec)
        assert type(back) is type(w)
        assert subgraphon_density(back, EDGE2) == subgraphon_density(w, EDGE2)
