import numpy as np
import pytest

from cliquedyn.chains import adjacency_spec, frequency_spec, poach_spec
from cliquedyn.equilibrium import med_pmf
from cliquedyn.exact import (
    ReducibleChainError,
    StateSpaceCapError,
    build_rate_matrix,
    complete_component_graphs,
    graph_stationary_check,
    stationary_distribution,
    transition_semigroup,
    verify_med_balance,
)
from cliquedyn.graphs import (
    AdjacencyMatrix,
    FrequencySpectrum,
    LabeledGraph,
    ModelParams,
    is_complete_components,
)
from cliquedyn.partitions import spectra
from tests.test_graphs import all_graphs

SPEC = FrequencySpectrum.from_dict


def test_build_rate_matrix_examples():
    p = ModelParams(mu=1.0, n=2)
    rm = build_rate_matrix(adjacency_spec(p), [AdjacencyMatrix.zero((1, 2))])
    assert len(rm.states) == 2
    zero_i = rm.index(AdjacencyMatrix.zero((1, 2)).key())
    edge_i = rm.index(AdjacencyMatrix.complete((1, 2)).key())
    expected = np.zeros((2, 2))
    expected[zero_i, edge_i] = 2.0
    expected[edge_i, zero_i] = 2.0
    np.fill_diagonal(expected, -2.0)
    assert np.allclose(rm.q, expected)

    rm = build_rate_matrix(frequency_spec(p), [SPEC({1: 2})])
    assert len(rm.states) == 2
    assert np.allclose(sorted(np.abs(rm.q).ravel()), [2, 2, 2, 2])

    rm = build_rate_matrix(poach_spec(ModelParams(mu=1.0, n=1)), [LabeledGraph(1)])
    assert rm.q.shape == (1, 1) and rm.q[0, 0] == 0.0


def test_build_rate_matrix_cap():
    p = ModelParams(mu=1.0, n=4)
    with pytest.raises(StateSpaceCapError):
        build_rate_matrix(poach_spec(p), [LabeledGraph(4)], cap=3)


def test_stationary_examples():
    rm = build_rate_matrix(
        adjacency_spec(ModelParams(mu=1.0, n=2)), [AdjacencyMatrix.zero((1, 2))]
    )
    pi = stationary_distribution(rm)
    assert np.allclose(pi.probabilities, [0.5, 0.5])

    for mu in (0.3, 1.0, 2.7):
        rm = build_rate_matrix(frequency_spec(ModelParams(mu=mu, n=2)), spectra(2))
        pi = stationary_distribution(rm)
        assert pi[SPEC({2: 1}).key()] == pytest.approx(1 / (1 + mu), abs=1e-12)

    rm = build_rate_matrix(frequency_spec(ModelParams(mu=1.0, n=3)), spectra(3))
    pi = stationary_distribution(rm)
    assert pi[SPEC({1: 3}).key()] == pytest.approx(1 / 6, abs=1e-12)
    assert pi[SPEC({1: 1, 2: 1}).key()] == pytest.approx(1 / 2, abs=1e-12)
    assert pi[SPEC({3: 1}).key()] == pytest.approx(1 / 3, abs=1e-12)


def test_full_graph_space_is_reducible_with_transient_paths():
    # non-clique states are transient; the recurrent class is exactly the
    # clique-component subspace
    p = ModelParams(mu=1.0, n=3)
    rm = build_rate_matrix(poach_spec(p), list(all_graphs(3)))
    assert len(rm.states) == 8
    with pytest.raises(ReducibleChainError) as err:
        stationary_distribution(rm)
    recurrent = err.value.classes
    assert len(recurrent) == 1
    keys = set(recurrent[0])
    expected = {g.key() for g in complete_component_graphs(3)}
    assert keys == expected


def test_semigroup_identity_and_rows():
    rm = build_rate_matrix(frequency_spec(ModelParams(mu=1.0, n=4)), spectra(4))
    assert np.allclose(transition_semigroup(rm, 0.0), np.eye(len(rm.states)))
    pt = transition_semigroup(rm, 0.7)
    assert np.allclose(pt.sum(axis=1), 1.0, atol=1e-10)
    assert pt.min() >= -1e-12


def test_semigroup_small_time_expansion():
    rm = build_rate_matrix(frequency_spec(ModelParams(mu=0.5, n=3)), spectra(3))
    t = 1e-4
    pt = transition_semigroup(rm, t)
    bound = np.linalg.norm(rm.q, np.inf) ** 2 * t ** 2 * np.exp(
        t * np.linalg.norm(rm.q, np.inf)
    )
    assert np.abs(pt - np.eye(len(rm.states)) - t * rm.q).max() <= bound


def test_semigroup_converges_to_stationary_monotonically():
    for n in (2, 3):
        rm = build_rate_matrix(frequency_spec(ModelParams(mu=1.0, n=n)), spectra(n))
        pi = stationary_distribution(rm).probabilities
        prev = None
        for t in (1.0, 2.0, 4.0, 8.0):
            pt = transition_semigroup(rm, t)
            dist = np.abs(pt - pi[None, :]).sum(axis=1).max()
            if prev is not None:
                assert dist <= prev + 1e-12
            prev = dist
        assert prev <= 1e-3


def test_med_balance_examples():
    assert verify_med_balance(1, 1.0) <= 1e-12
    assert verify_med_balance(2, 1.0) <= 1e-12
    for mu in (0.5, 1.0, 2.0):
        assert verify_med_balance(3, mu) <= 1e-10


def test_frequency_stationary_matches_ewens_for_all_small_sizes():
    for n in range(1, 8):
        for mu in (0.25, 1.0, 4.0):
            rm = build_rate_matrix(frequency_spec(ModelParams(mu=mu, n=n)), spectra(n))
            pi = stationary_distribution(rm)
            for nu in spectra(n):
                assert pi[nu.key()] == pytest.approx(med_pmf(nu, mu), abs=1e-10)


def test_graph_stationary_check_values():
    rows = {r.state_key: r for r in graph_stationary_check(2, 1.0)}
    edge_key = LabeledGraph(2, frozenset({(1, 2)})).key()
    assert rows[edge_key].exact_pi == pytest.approx(0.5, abs=1e-12)
    assert rows[edge_key].abs_diff_product_rule <= 1e-12

    rows = list(graph_stationary_check(3, 1.0))
    for r in rows:
        assert r.abs_diff_corrected <= 1e-10
        n_edges = len(r.state_key[1])
        if n_edges == 3:  # triangle: the plain product law is off by 1/6
            assert r.exact_pi == pytest.approx(1 / 3, abs=1e-12)
            assert r.abs_diff_product_rule == pytest.approx(1 / 6, abs=1e-12)
        else:
            assert r.exact_pi == pytest.approx(1 / 6, abs=1e-12)
            assert r.abs_diff_product_rule <= 1e-12


def test_projected_poach_chain_equals_frequency_chain():
    from cliquedyn.graphs import spectrum_of_graph

    for n in (2, 3, 4):
        params = ModelParams(mu=1.0, n=n)
        graph_rm = build_rate_matrix(poach_spec(params), complete_component_graphs(n))
        freq_rm = build_rate_matrix(frequency_spec(params), spectra(n))
        spec_of = {
            key: spectrum_of_graph(g).key()
            for key, g in zip(graph_rm.states, graph_rm.objects)
        }
        for gi, gkey in enumerate(graph_rm.states):
            fi = freq_rm.states.index(spec_of[gkey])
            projected: dict = {}
            for gj in range(len(graph_rm.states)):
                if gj == gi:
                    continue
                tgt = spec_of[graph_rm.states[gj]]
                if tgt != spec_of[gkey]:
                    projected[tgt] = projected.get(tgt, 0.0) + graph_rm.q[gi, gj]
            for fj, fkey in enumerate(freq_rm.states):
                if fj == fi:
                    continue
                assert projected.get(fkey, 0.0) == pytest.approx(freq_rm.q[fi, fj])
