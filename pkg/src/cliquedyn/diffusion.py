"""The grapheme-valued Wright-Fisher diffusion with mutation, tested through
its martingale problem.

The diffusion is infinite-dimensional; its law is represented only through
sample-pattern densities and through the N-particle chain whose spectrum
marginal is simulated here.  The generator acting on a pattern density
reduces to a finite combination of densities of the pattern and its one-
vertex deletions, which is what every check below exploits.

For patterns on at most three vertices every density is an affine function
of the block power sums P2 and P3, so the N-particle paths are simulated by
a jitted kernel that tracks sums of squared and cubed component sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .duality import backward_rates, forward_rate_matrix, potential
from .equilibrium import sample_gem, sample_med_spectrum
from .graphons import (
    BlockGraphon,
    TargetGraph,
    block_subgraphon_density,
    graphon_of_spectrum,
    spectrum_subgraph_density,
    subgraphon_density,
)
from .graphs import AdjacencyMatrix, FrequencySpectrum, delete_index, duplicate
from .rng import stream

__all__ = [
    "SamplePolynomial",
    "MartingaleReport",
    "omega_coefficients",
    "phi_exact",
    "omega_grapheme_apply",
    "omega_spectrum_apply",
    "power_sum_coeffs",
    "generator_gap",
    "martingale_residual",
    "fk_grapheme_check",
    "FkGraphemeReport",
    "stationarity_check",
    "StationarityRow",
    "discretize_block_graphon",
]

# a sample polynomial is exactly a labelled pattern: size k plus an
# adjacency matrix on 1..k
SamplePolynomial = TargetGraph


# ---------------------------------------------------------------------------
# Generator action on pattern densities
# ---------------------------------------------------------------------------

def _reduced(a: AdjacencyMatrix, j: int) -> TargetGraph:
    small = delete_index(a, j)
    relabel = AdjacencyMatrix(tuple(range(1, small.size + 1)), small.entries)
    return TargetGraph(small.size, relabel)


def omega_coefficients(poly: TargetGraph, mu: float) -> tuple:
    """Moment closure of the generator on a pattern density.

    Returns (terms, self_coeff) with terms = [(reduced_pattern_or_None,
    coeff)], one per deleted vertex j, where coeff counts the duplication
    pairs fixing the pattern at j plus mu if row j vanishes, and self_coeff =
    -(k(k-1) + mu k).  ``None`` stands for the empty pattern of density 1.
    """
    a = poly.adjacency
    k = poly.k
    terms = []
    for j in range(1, k + 1):
        cnt = 0.0
        for i in range(1, k + 1):
            if i != j and duplicate(a, i, j).key() == a.key():
                cnt += 1.0
        if not a.entries[a.position(j)].any():
            cnt += mu
        if cnt > 0:
            terms.append((_reduced(a, j) if k > 1 else None, cnt))
    return terms, -(k * (k - 1) + mu * k)


def phi_exact(w, poly: TargetGraph) -> float:
    """Pattern density of a graphon representation (exact)."""
    return subgraphon_density(w, poly)


def omega_grapheme_apply(w, poly: TargetGraph, mu: float) -> float:
    """Generator value on a pattern density at a graphon state, with every
    density evaluated by exact i.i.d. sampling."""
    terms, self_coeff = omega_coefficients(poly, mu)
    out = self_coeff * phi_exact(w, poly)
    for reduced, coeff in terms:
        out += coeff * (1.0 if reduced is None else phi_exact(w, reduced))
    return out


def omega_spectrum_apply(nu: FrequencySpectrum, poly: TargetGraph, mu: float) -> float:
    """Generator value with densities evaluated by sampling distinct vertices
    (the finite-N form) from a clique-component graph with spectrum nu."""
    terms, self_coeff = omega_coefficients(poly, mu)
    out = self_coeff * spectrum_subgraph_density(nu, poly)
    for reduced, coeff in terms:
        out += coeff * (
            1.0 if reduced is None else spectrum_subgraph_density(nu, reduced)
        )
    return out


def power_sum_coeffs(poly: TargetGraph) -> tuple:
    """Density of a pattern on k <= 3 vertices as c0 + c1 P2 + c2 P3, where
    P_r sums the r-th powers of the block masses."""
    if poly.k > 3:
        raise ValueError("power-sum form available for k <= 3 only")
    if not poly.is_complete_components():
        return (0.0, 0.0, 0.0)
    sizes = poly.component_sizes()
    if poly.k == 1:
        return (1.0, 0.0, 0.0)
    if poly.k == 2:
        return (0.0, 1.0, 0.0) if sizes == [2] else (1.0, -1.0, 0.0)
    if sizes == [3]:
        return (0.0, 0.0, 1.0)
    if sizes == [2, 1]:
        return (0.0, 1.0, -1.0)
    return (1.0, -3.0, 2.0)


def _omega_power_sum_coeffs(poly: TargetGraph, mu: float) -> tuple:
    terms, self_coeff = omega_coefficients(poly, mu)
    out = self_coeff * np.asarray(power_sum_coeffs(poly))
    for reduced, coeff in terms:
        red = (1.0, 0.0, 0.0) if reduced is None else power_sum_coeffs(reduced)
        out = out + coeff * np.asarray(red)
    return tuple(out)


# ---------------------------------------------------------------------------
# Jitted N-particle spectrum kernel
# ---------------------------------------------------------------------------

def _moran_core_py(n, init_sizes, ev_time, ev_mut, ev_i, ev_j, grid, pat, itg):
    """Walk one replicate's pre-generated event marks, tracking sums of
    squared/cubed component sizes, the pattern density c0 + c1 P2 + c2 P3,
    and the exact piecewise-constant time integral of the generator value."""
    cls = np.empty(n, dtype=np.int64)
    size = np.zeros(n, dtype=np.int64)
    free = np.empty(n, dtype=np.int64)
    m = len(init_sizes)
    pos = 0
    for b in range(m):
        s = init_sizes[b]
        for t in range(s):
            cls[pos + t] = b
        size[b] = s
        pos += s
    top = 0
    for c in range(n - 1, m - 1, -1):
        free[top] = c
        top += 1
    ss = 0
    sc = 0
    for b in range(m):
        ss += size[b] * size[b]
        sc += size[b] * size[b] * size[b]
    n2 = float(n) * float(n)
    n3 = n2 * float(n)
    n_grid = grid.shape[0]
    phi_grid = np.empty(n_grid)
    integ_grid = np.empty(n_grid)
    gi = 0
    t_cur = 0.0
    integral = 0.0
    max_jump = 0.0
    p2 = ss / n2
    p3 = sc / n3
    phi = pat[0] + pat[1] * p2 + pat[2] * p3
    phi0 = phi
    f_int = itg[0] + itg[1] * p2 + itg[2] * p3
    for e in range(ev_time.shape[0]):
        te = ev_time[e]
        while gi < n_grid and grid[gi] <= te:
            phi_grid[gi] = phi
            integ_grid[gi] = integral + f_int * (grid[gi] - t_cur)
            gi += 1
        integral += f_int * (te - t_cur)
        t_cur = te
        if ev_mut[e]:
            i = ev_i[e]
            a = cls[i]
            sa = size[a]
            ss += 2 - 2 * sa
            sc += 3 * sa * (1 - sa)
            size[a] = sa - 1
            if sa == 1:
                free[top] = a
                top += 1
            top -= 1
            c = free[top]
            size[c] = 1
            cls[i] = c
        else:
            i = ev_i[e]
            j = ev_j[e]
            a = cls[i]
            b = cls[j]
            if a != b:
                sa = size[a]
                sb = size[b]
                ss += 2 * (sa - sb + 1)
                sc += 3 * (sa * sa + sa - sb * sb + sb)
                size[a] = sa + 1
                size[b] = sb - 1
                if sb == 1:
                    free[top] = b
                    top += 1
                cls[j] = a
        p2 = ss / n2
        p3 = sc / n3
        new_phi = pat[0] + pat[1] * p2 + pat[2] * p3
        jump = abs(new_phi - phi)
        if jump > max_jump:
            max_jump = jump
        phi = new_phi
        f_int = itg[0] + itg[1] * p2 + itg[2] * p3
    while gi < n_grid:
        phi_grid[gi] = phi
        integ_grid[gi] = integral + f_int * (grid[gi] - t_cur)
        gi += 1
    return phi0, phi_grid, integ_grid, max_jump


try:  # compiled fast path; the pure-Python twin stays as the reference
    from numba import njit

    _moran_core = njit(cache=True)(_moran_core_py)
except ImportError:  # pragma: no cover
    _moran_core = _moran_core_py


def _generate_marks(n: int, mu: float, t_end: float, rng):
    total = n * (n - 1) + mu * n
    count = rng.poisson(total * t_end)
    times = np.sort(rng.random(count)) * t_end
    is_mut = rng.random(count) < (mu * n) / total if total > 0 else np.zeros(count, bool)
    i = rng.integers(0, n, count)
    j = rng.integers(0, n - 1, count)
    j = j + (j >= i)
    return times, is_mut, i.astype(np.int64), j.astype(np.int64)


def simulate_pattern_moments(
    n, mu, t_grid, replicates, seed, pat_coeffs, itg_coeffs, init_sizes
):
    """Replicate farm over the jitted kernel.

    Returns arrays (phi0, phi[rep, grid], integral[rep, grid], max_jump[rep]).
    """
    grid = np.asarray(sorted(t_grid), dtype=float)
    t_end = float(grid[-1]) if len(grid) else 0.0
    init = np.asarray(init_sizes, dtype=np.int64)
    if init.sum() != n:
        raise ValueError("initial component sizes must sum to n")
    pat = np.asarray(pat_coeffs, dtype=float)
    itg = np.asarray(itg_coeffs, dtype=float)
    phi0 = np.empty(replicates)
    phis = np.empty((replicates, len(grid)))
    integs = np.empty((replicates, len(grid)))
    jumps = np.empty(replicates)
    for rep in range(replicates):
        rng = stream(seed, rep)
        times, is_mut, ev_i, ev_j = _generate_marks(n, mu, t_end, rng)
        p0, pg, ig, mj = _moran_core(n, init, times, is_mut, ev_i, ev_j, grid, pat, itg)
        phi0[rep] = p0
        phis[rep] = pg
        integs[rep] = ig
        jumps[rep] = mj
    return phi0, phis, integs, jumps


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MartingaleReport:
    """Residual means of the martingale along a time grid."""

    n: int
    mu: float
    pattern_key: str
    t_grid: tuple
    residual_means: tuple
    residual_stderrs: tuple
    phi_means: tuple
    phi_stderrs: tuple
    theory_phi: tuple
    phi0: float
    max_jump: float
    replicates: int


def martingale_residual(
    n: int,
    mu: float,
    poly: TargetGraph,
    t_grid,
    replicates: int,
    seed: int,
    init_sizes=None,
) -> MartingaleReport:
    """Simulate the N-particle chain and report the martingale residual
    phi(V_t) - phi(V_0) - int_0^t (generator phi)(V_s) ds per grid point.

    The time integral is exact (the integrand is piecewise constant between
    jumps).  For the two-vertex edge pattern the analytic relaxation
    phi* + (phi_0 - phi*) exp(-2(1+mu)t), phi* = 1/(1+mu), is also reported.
    """
    if poly.k > 3:
        raise ValueError("martingale residuals supported for k <= 3")
    if init_sizes is None:
        init_sizes = [n]
    pat = power_sum_coeffs(poly)
    itg = _omega_power_sum_coeffs(poly, mu)
    phi0, phis, integs, jumps = simulate_pattern_moments(
        n, mu, t_grid, replicates, seed, pat, itg, init_sizes
    )
    grid = sorted(t_grid)
    residuals = phis - phi0[:, None] - integs
    res_mean = residuals.mean(axis=0)
    res_se = residuals.std(axis=0, ddof=1) / math.sqrt(replicates)
    phi_mean = phis.mean(axis=0)
    phi_se = phis.std(axis=0, ddof=1) / math.sqrt(replicates)
    is_edge = poly.k == 2 and poly.component_sizes() == [2]
    if is_edge:
        star = 1.0 / (1.0 + mu)
        theory = tuple(
            star + (phi0[0] - star) * math.exp(-2.0 * (1.0 + mu) * t) for t in grid
        )
    else:
        theory = tuple(float("nan") for _ in grid)
    return MartingaleReport(
        n=n,
        mu=mu,
        pattern_key=poly.key(),
        t_grid=tuple(grid),
        residual_means=tuple(float(v) for v in res_mean),
        residual_stderrs=tuple(float(v) for v in res_se),
        phi_means=tuple(float(v) for v in phi_mean),
        phi_stderrs=tuple(float(v) for v in phi_se),
        theory_phi=theory,
        phi0=float(phi0[0]),
        max_jump=float(jumps.max()),
        replicates=replicates,
    )


def generator_gap(n: int, mu: float, poly: TargetGraph, trials: int, seed: int) -> tuple:
    """Max gap between the finite-N generator action (distinct-vertex
    sampling) and the limit generator action (i.i.d. sampling) over random
    clique-component states of size n.  Returns (max_gap, k^2 / n)."""
    if poly.k > 4:
        raise ValueError("generator gap capped at k <= 4")
    states = [
        FrequencySpectrum.from_dict({n: 1}, n),
        FrequencySpectrum.from_dict({1: n}, n),
    ]
    for trial in range(trials):
        states.append(sample_med_spectrum(n, 1.0, stream(seed, trial)))
    worst = 0.0
    for nu in states:
        w = graphon_of_spectrum(nu)
        gap = abs(
            omega_spectrum_apply(nu, poly, mu) - omega_grapheme_apply(w, poly, mu)
        )
        worst = max(worst, gap)
    return worst, poly.k ** 2 / n


def discretize_block_graphon(w: BlockGraphon, n: int) -> list:
    """Component sizes of an n-vertex stand-in for a block graphon.

    Largest-remainder rounding over blocks plus the dust bucket; dust
    vertices enter as singletons.
    """
    raw = [a * n for a in w.block_sizes] + [w.dust * n]
    sizes = [int(math.floor(x)) for x in raw]
    leftover = n - sum(sizes)
    order = sorted(range(len(raw)), key=lambda b: raw[b] - sizes[b], reverse=True)
    for b in order[:leftover]:
        sizes[b] += 1
    out = [s for s in sizes[:-1] if s > 0]
    out.extend([1] * sizes[-1])
    return sorted(out, reverse=True)


@dataclass(frozen=True)
class FkGraphemeReport:
    pattern_key: str
    t: float
    lhs_estimate: float
    lhs_stderr: float
    rhs_exact: float
    gap: float
    tolerance: float
    passed: bool


def fk_grapheme_check(
    w0: BlockGraphon,
    poly: TargetGraph,
    mu: float,
    t: float,
    n_particle: int,
    replicates: int,
    seed: int,
) -> FkGraphemeReport:
    """Two-sided check of the lifted duality.

    Left side: E[phi(V_t)] estimated from the N-particle chain started at a
    discretization of w0.  Right side: the weighted backward-semigroup matrix
    on k-patterns contracted against the exact initial densities of w0.
    The allowed gap is 4 MC standard errors plus an O(k^2/N) finite-size
    allowance.
    """
    if poly.k > 3:
        raise ValueError("lifted duality check capped at k <= 3")
    fwd = forward_rate_matrix(poly.k, mu)
    bwd = backward_rates(poly.k, mu)
    beta = np.array([potential(a, mu) for a in fwd.objects])
    weighted = scipy.linalg.expm(t * (bwd.q + np.diag(beta)))
    row = weighted[fwd.states.index(poly.adjacency.key())]
    rhs = sum(
        r * block_subgraphon_density(w0, TargetGraph(poly.k, a))
        for r, a in zip(row, fwd.objects)
    )
    init = discretize_block_graphon(w0, n_particle)
    pat = power_sum_coeffs(poly)
    _, phis, _, _ = simulate_pattern_moments(
        n_particle, mu, [t], replicates, seed, pat, (0.0, 0.0, 0.0), init
    )
    lhs = float(phis[:, 0].mean())
    se = float(phis[:, 0].std(ddof=1) / math.sqrt(replicates))
    allowance = 4.0 * se + 4.0 * poly.k ** 2 / n_particle
    gap = abs(lhs - rhs)
    return FkGraphemeReport(
        pattern_key=poly.key(),
        t=t,
        lhs_estimate=lhs,
        lhs_stderr=se,
        rhs_exact=float(rhs),
        gap=float(gap),
        tolerance=float(allowance),
        passed=bool(gap <= allowance),
    )


@dataclass(frozen=True)
class StationarityRow:
    pattern_key: str
    mean: float
    stderr: float
    z_score: float


def stationarity_check(mu: float, polys, replicates: int, seed: int) -> list:
    """Ensemble means of the generator value over stationary (GEM) samples;
    all means must vanish within Monte Carlo error."""
    rows = []
    samples = [
        sample_gem(mu, 1e-10, stream(seed, rep)) for rep in range(replicates)
    ]
    for poly in polys:
        if poly.k > 4:
            raise ValueError("stationarity check capped at k <= 4")
        vals = np.empty(replicates)
        if poly.k <= 3:
            g0, g1, g2 = _omega_power_sum_coeffs(poly, mu)
            for rep, gem in enumerate(samples):
                wts = np.asarray(gem.weights)
                p2 = float(np.sum(wts ** 2))
                p3 = float(np.sum(wts ** 3))
                vals[rep] = g0 + g1 * p2 + g2 * p3
        else:
            for rep, gem in enumerate(samples):
                w = BlockGraphon(gem.ranked())
                vals[rep] = omega_grapheme_apply(w, poly, mu)
        mean = float(vals.mean())
        se = float(vals.std(ddof=1) / math.sqrt(replicates))
        rows.append(
            StationarityRow(
                pattern_key=poly.key(),
                mean=mean,
                stderr=se,
                z_score=mean / max(se, 1e-300),
            )
        )
    return rows
