import math

import numpy as np
import pytest

from cliquedyn.diffusion import (
    SamplePolynomial,
    _generate_marks,
    _moran_core,
    _moran_core_py,
    _omega_power_sum_coeffs,
    discretize_block_graphon,
    fk_grapheme_check,
    generator_gap,
    martingale_residual,
    omega_coefficients,
    omega_grapheme_apply,
    omega_spectrum_apply,
    phi_exact,
    power_sum_coeffs,
    stationarity_check,
)
from cliquedyn.equilibrium import gem_expected_density, sample_gem
from cliquedyn.graphons import (
    BlockGraphon,
    ConstantGraphon,
    TargetGraph,
    block_subgraphon_density,
    complete_component_targets,
)
from cliquedyn.graphs import FrequencySpectrum
from cliquedyn.rng import stream

EDGE2 = TargetGraph.from_edges(2, [(1, 2)])
FIXTURES = [
    BlockGraphon((1.0,)),
    BlockGraphon((2 / 3, 1 / 3)),
    BlockGraphon((0.5, 0.25)),
    BlockGraphon((0.4, 0.3, 0.2, 0.1)),
    BlockGraphon(sample_gem(1.0, 1e-10, seed=2).ranked()),
]


def test_phi_exact_examples():
    assert phi_exact(BlockGraphon((1.0,)), TargetGraph.complete(3)) == 1.0
    w = BlockGraphon((2 / 3, 1 / 3))
    assert phi_exact(w, EDGE2) == pytest.approx(5 / 9)
    assert phi_exact(w, TargetGraph.empty(2)) == pytest.approx(4 / 9)


def test_constants_are_harmonic():
    one = TargetGraph.empty(1)
    for w in FIXTURES:
        for mu in (0.0, 0.7, 2.0):
            assert omega_grapheme_apply(w, one, mu) == pytest.approx(0.0, abs=1e-14)


def test_omega_moment_closure_structure():
    for k in (2, 3):
        for poly in complete_component_targets(k):
            terms, self_coeff = omega_coefficients(poly, 1.0)
            assert self_coeff == -(k * (k - 1) + k)
            for reduced, coeff in terms:
                assert coeff > 0
                if reduced is not None:
                    assert reduced.k == k - 1


def test_edge_relaxation_identity():
    # generator value on the edge density is 2 - 2(1+mu) phi, exactly
    for w in FIXTURES:
        for mu in (0.0, 0.5, 1.0, 2.0):
            phi = phi_exact(w, EDGE2)
            assert omega_grapheme_apply(w, EDGE2, mu) == pytest.approx(
                2 - 2 * (1 + mu) * phi, abs=1e-12
            )


def test_power_sum_coeffs_match_block_densities():
    for w in FIXTURES:
        p2 = sum(a ** 2 for a in w.block_sizes)
        p3 = sum(a ** 3 for a in w.block_sizes)
        for k in (1, 2, 3):
            for poly in complete_component_targets(k):
                c0, c1, c2 = power_sum_coeffs(poly)
                assert c0 + c1 * p2 + c2 * p3 == pytest.approx(
                    block_subgraphon_density(w, poly), abs=1e-12
                )


def test_omega_power_sum_coeffs_match_generic_apply():
    for w in FIXTURES:
        p2 = sum(a ** 2 for a in w.block_sizes)
        p3 = sum(a ** 3 for a in w.block_sizes)
        for k in (1, 2, 3):
            for poly in complete_component_targets(k):
                g0, g1, g2 = _omega_power_sum_coeffs(poly, 1.3)
                assert g0 + g1 * p2 + g2 * p3 == pytest.approx(
                    omega_grapheme_apply(w, poly, 1.3), abs=1e-12
                )


def test_gem_mean_of_generator_is_exactly_zero():
    # algebraic stationarity: contract the moment closure with the exact
    # expected densities of the stationary law
    for mu in (0.5, 1.0, 2.0, 4.0):
        for k in (1, 2, 3, 4):
            for poly in complete_component_targets(k):
                terms, self_coeff = omega_coefficients(poly, mu)
                val = self_coeff * gem_expected_density(poly, mu)
                for reduced, coeff in terms:
                    val += coeff * (
                        1.0 if reduced is None else gem_expected_density(reduced, mu)
                    )
                assert val == pytest.approx(0.0, abs=1e-12)


def test_kernel_python_and_compiled_agree_bitwise():
    rng = stream(5, 0)
    times, im, ei, ej = _generate_marks(25, 1.0, 3.0, rng)
    init = np.asarray([10, 10, 5], dtype=np.int64)
    grid = np.asarray([0.5, 1.0, 3.0])
    pat = np.asarray(power_sum_coeffs(EDGE2))
    itg = np.asarray(_omega_power_sum_coeffs(EDGE2, 1.0))
    a = _moran_core(25, init, times, im, ei, ej, grid, pat, itg)
    b = _moran_core_py(25, init, times, im, ei, ej, grid, pat, itg)
    assert a[0] == b[0]
    assert np.array_equal(a[1], b[1])
    assert np.array_equal(a[2], b[2])
    assert a[3] == b[3]


def test_kernel_against_direct_state_replay():
    # replay a fixed mark sequence with a dict-of-sizes reference evolution
    n = 6
    times = np.asarray([0.2, 0.5, 0.9, 1.4, 1.9])
    is_mut = np.asarray([False, True, False, True, False])
    ev_i = np.asarray([0, 2, 3, 3, 1], dtype=np.int64)
    ev_j = np.asarray([3, 0, 1, 0, 2], dtype=np.int64)
    init = np.asarray([3, 2, 1], dtype=np.int64)
    grid = np.asarray([0.3, 1.0, 2.0])
    pat = np.asarray(power_sum_coeffs(EDGE2))
    itg = np.asarray((0.0, 0.0, 0.0))
    phi0, phis, _, max_jump = _moran_core_py(
        n, init, times, is_mut, ev_i, ev_j, grid, pat, itg
    )
    cls = [0, 0, 0, 1, 1, 2]
    next_id = 3

    def p2():
        sizes: dict = {}
        for c in cls:
            sizes[c] = sizes.get(c, 0) + 1
        return sum(s * s for s in sizes.values()) / n ** 2

    assert phi0 == pytest.approx(p2())
    expected = []
    grid_idx = 0
    snapshots = {}
    for e in range(len(times)):
        while grid_idx < len(grid) and grid[grid_idx] <= times[e]:
            snapshots[grid_idx] = p2()
            grid_idx += 1
        if is_mut[e]:
            cls[ev_i[e]] = next_id
            next_id += 1
        else:
            cls[ev_j[e]] = cls[ev_i[e]]
    while grid_idx < len(grid):
        snapshots[grid_idx] = p2()
        grid_idx += 1
    for gi, val in snapshots.items():
        assert phis[gi] == pytest.approx(val, abs=1e-14)
    assert max_jump <= 2 * 2 / n + 1e-14


def test_martingale_residual_small_run():
    rep = martingale_residual(
        80, 1.0, EDGE2, [0.0, 0.1, 0.3, 0.8], replicates=400, seed=77
    )
    assert rep.residual_means[0] == 0.0  # exactly zero at t = 0
    bias = generator_gap(80, 1.0, EDGE2, 10, seed=1)[0]
    for t, m, se in zip(rep.t_grid, rep.residual_means, rep.residual_stderrs):
        assert abs(m) <= 4 * se + bias * t
    for t, pm, pse, th in zip(
        rep.t_grid, rep.phi_means, rep.phi_stderrs, rep.theory_phi
    ):
        assert pm == pytest.approx(th, abs=4 * pse + 2 / 80)
    assert rep.max_jump <= 2 * 2 / 80 + 1e-12


def test_martingale_nontrivial_pattern():
    tri = TargetGraph.complete(3)
    rep = martingale_residual(
        60, 0.8, tri, [0.2, 0.6], replicates=400, seed=13, init_sizes=[30, 30]
    )
    for t, m, se in zip(rep.t_grid, rep.residual_means, rep.residual_stderrs):
        assert abs(m) <= 4 * se + 3 ** 2 / 60 * t
    assert rep.max_jump <= 2 * 3 / 60 + 1e-12


def test_generator_gap_trivial_and_decay():
    assert generator_gap(50, 1.0, TargetGraph.empty(1), 5, seed=1)[0] <= 1e-12
    gaps = [generator_gap(n, 1.0, EDGE2, 25, seed=3)[0] for n in (32, 64, 128, 256)]
    assert all(gaps[i + 1] < gaps[i] for i in range(3))
    ref = [4 / n for n in (32, 64, 128, 256)]
    for g, r in zip(gaps, ref):
        assert g <= 2.5 * r


def test_discretize_block_graphon():
    w = BlockGraphon((0.5, 0.3))
    sizes = discretize_block_graphon(w, 10)
    assert sum(sizes) == 10
    assert sizes[0] == 5 and sizes[1] == 3
    assert sizes[2:] == [1, 1]  # dust becomes singletons
    gem = BlockGraphon(sample_gem(1.0, 1e-10, seed=5).ranked())
    assert sum(discretize_block_graphon(gem, 137)) == 137


def test_fk_grapheme_zero_time():
    w = BlockGraphon((2 / 3, 1 / 3))
    rep = fk_grapheme_check(w, EDGE2, 1.0, 0.0, 120, 200, seed=6)
    assert rep.rhs_exact == pytest.approx(phi_exact(w, EDGE2), abs=1e-12)
    assert rep.lhs_estimate == pytest.approx(phi_exact(w, EDGE2), abs=0.02)


def test_fk_grapheme_matches_relaxation_formula():
    w = BlockGraphon((2 / 3, 1 / 3))
    mu, t = 1.0, 0.5
    rep = fk_grapheme_check(w, EDGE2, mu, t, 250, 800, seed=8)
    closed = 1 / (1 + mu) + (5 / 9 - 1 / (1 + mu)) * math.exp(-2 * (1 + mu) * t)
    assert rep.rhs_exact == pytest.approx(closed, abs=1e-10)
    assert rep.passed


def test_fk_grapheme_long_time_limit():
    w = BlockGraphon((0.9,))
    mu = 1.0
    rep = fk_grapheme_check(w, EDGE2, mu, 6.0, 250, 800, seed=9)
    assert rep.rhs_exact == pytest.approx(1 / (1 + mu), abs=1e-5)
    assert rep.passed


def test_stationarity_check_rows():
    polys = [TargetGraph.empty(1)] + complete_component_targets(2)
    rows = stationarity_check(1.0, polys, replicates=1500, seed=10)
    by_key = {r.pattern_key: r for r in rows}
    assert by_key["k1:"].mean == 0.0  # constants are harmonic, exactly
    for r in rows:
        assert abs(r.z_score) <= 4.5
