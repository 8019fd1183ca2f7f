"""Ewens (MED) and GEM equilibrium laws: exact pmfs, samplers, identities,
and the finite-size-to-limit convergence experiment.

The frequency-spectrum stationary law is the multivariate Ewens distribution;
its per-graph version divides by the number of labelled clique-component
graphs sharing a spectrum.  The size-ordered limit law is GEM stick breaking
with Beta(1, mu) sticks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .graphs import FrequencySpectrum, LabeledGraph
from .graphons import (
    TargetGraph,
    block_subgraphon_density,
    complete_component_targets,
    graphon_of_spectrum,
    spectrum_subgraph_density,
)
from .partitions import labeled_graph_count
from .rng import stream

__all__ = [
    "GemSample",
    "med_log_pmf",
    "med_pmf",
    "class_count",
    "graph_pmf_corrected",
    "graph_pmf_product_rule",
    "sample_med_spectrum",
    "sample_med",
    "component_count_law",
    "sample_gem",
    "gem_expected_density",
    "med_to_gem_experiment",
    "ConvergenceRow",
]


# ---------------------------------------------------------------------------
# Exact laws
# ---------------------------------------------------------------------------

def med_log_pmf(nu: FrequencySpectrum, mu: float) -> float:
    """Log of the multivariate Ewens pmf, computed in log space.

    pmf(nu) = N!/(mu (mu+1) ... (mu+N-1)) * prod_j mu^nu(j) / (j^nu(j) nu(j)!)
    """
    if mu < 0:
        raise ValueError("mu must be >= 0")
    n = nu.total
    if mu == 0.0:
        # degenerate limit: a single component of size N
        return 0.0 if nu.counts == ((n, 1),) else -math.inf
    out = math.lgamma(n + 1)
    out -= math.lgamma(mu + n) - math.lgamma(mu)
    for (size, mult) in nu.counts:
        out += mult * (math.log(mu) - math.log(size)) - math.lgamma(mult + 1)
    return out


def med_pmf(nu: FrequencySpectrum, mu: float) -> float:
    """Multivariate Ewens pmf of a spectrum."""
    return math.exp(med_log_pmf(nu, mu))


def class_count(nu: FrequencySpectrum) -> int:
    """Number of labelled clique-component graphs with spectrum nu."""
    return labeled_graph_count(nu)


def graph_pmf_corrected(nu: FrequencySpectrum, mu: float) -> float:
    """Stationary probability of one labelled clique-component graph with
    spectrum nu: med_pmf(nu) split evenly over the class."""
    return med_pmf(nu, mu) / class_count(nu)


def graph_pmf_product_rule(nu: FrequencySpectrum, mu: float) -> float:
    """The plain product law prod_j mu^nu(j) / (mu + j - 1) over j = 1..N.

    Kept for comparison reports: it disagrees with the exact per-graph
    stationary law whenever some component size exceeds 2 (it omits a
    prod_j ((j-1)!)^nu(j) factor).
    """
    if mu == 0.0:
        return 1.0 if nu.counts == ((nu.total, 1),) else 0.0
    out = 1.0
    for j in range(1, nu.total + 1):
        out *= mu ** nu.get(j) / (mu + j - 1)
    return out


def component_count_law(n: int, mu: float) -> np.ndarray:
    """Exact pmf of the number of components under the MED on size n.

    The count is a sum of independent Bernoulli(mu / (mu + i - 1)) variables,
    i = 1..n; the pmf is built by iterated convolution.  Entry c of the
    returned array is P(#components = c), c = 0..n.
    """
    if n > 1000:
        raise ValueError("component count law capped at n <= 1000")
    pmf = np.zeros(n + 1)
    pmf[0] = 1.0
    for i in range(1, n + 1):
        p = 1.0 if i == 1 else mu / (mu + i - 1)
        nxt = (1 - p) * pmf
        nxt[1:] += p * pmf[:-1]
        pmf = nxt
    return pmf


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------

def sample_med_spectrum(n: int, mu: float, rng) -> FrequencySpectrum:
    """Sequential-seating sampler for the MED spectrum.

    Vertex m+1 joins an existing component of size s with probability
    s/(m+mu) and opens a new component with probability mu/(m+mu).  Joining
    proportionally to size is realized in O(1) by copying the component of a
    uniformly chosen earlier vertex.
    """
    comp = np.empty(n, dtype=np.int64)
    comp[0] = 0
    next_id = 1
    us = rng.random(n)
    for m in range(1, n):
        r = us[m] * (m + mu)
        if r < m:
            comp[m] = comp[int(r)]
        else:
            comp[m] = next_id
            next_id += 1
    sizes = np.bincount(comp, minlength=next_id)
    counts: dict = {}
    for s in sizes:
        if s:
            counts[int(s)] = counts.get(int(s), 0) + 1
    return FrequencySpectrum.from_dict(counts, n)


def _clique_graph_of_partition(blocks) -> LabeledGraph:
    edges = set()
    n = sum(len(b) for b in blocks)
    for block in blocks:
        edges.update(itertools.combinations(sorted(block), 2))
    return LabeledGraph(n, frozenset(edges))


def sample_med(n: int, mu: float, seed) -> LabeledGraph:
    """Sample a labelled clique-component graph whose spectrum is MED."""
    rng = seed if isinstance(seed, np.random.Generator) else stream(int(seed), 0)
    comp = np.empty(n, dtype=np.int64)
    comp[0] = 0
    next_id = 1
    us = rng.random(n)
    for m in range(1, n):
        r = us[m] * (m + mu)
        if r < m:
            comp[m] = comp[int(r)]
        else:
            comp[m] = next_id
            next_id += 1
    blocks: dict = {}
    for v in range(n):
        blocks.setdefault(int(comp[v]), []).append(v + 1)
    return _clique_graph_of_partition(list(blocks.values()))


@dataclass(frozen=True)
class GemSample:
    """Stick-breaking weights in generation order, plus unbroken residual."""

    weights: tuple
    residual: float

    def ranked(self) -> tuple:
        """Weights rearranged non-increasingly (size-ordered view)."""
        return tuple(sorted(self.weights, reverse=True))


def sample_gem(mu: float, tolerance: float, seed) -> GemSample:
    """GEM stick breaking with Beta(1, mu) sticks V_i = 1 - U^(1/mu),
    truncated once the residual mass drops below ``tolerance``."""
    if mu <= 0:
        raise ValueError("GEM requires mu > 0 (the stick never breaks at mu = 0)")
    if not (0.0 < tolerance < 1.0):
        raise ValueError("tolerance must be in (0,1)")
    rng = seed if isinstance(seed, np.random.Generator) else stream(int(seed), 0)
    weights = []
    residual = 1.0
    while residual >= tolerance and len(weights) < 100_000:
        v = 1.0 - rng.random() ** (1.0 / mu)
        weights.append(residual * v)
        residual *= 1.0 - v
    return GemSample(tuple(weights), residual)


# ---------------------------------------------------------------------------
# Limit densities and the convergence experiment
# ---------------------------------------------------------------------------

def gem_expected_density(f: TargetGraph, mu: float) -> float:
    """Expected sampling density of a labelled pattern under the stationary
    (GEM) grapheme: the size-k per-graph Ewens probability, or 0 for patterns
    without complete components."""
    if f.k > 8:
        raise ValueError("expected density capped at k <= 8")
    if not f.is_complete_components():
        return 0.0
    nu = FrequencySpectrum.from_dict(
        {s: f.component_sizes().count(s) for s in set(f.component_sizes())}, f.k
    )
    return graph_pmf_corrected(nu, mu)


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    target_key: str
    estimate: float
    stderr: float
    exact_limit: float
    gap: float
    estimate_iid: float
    stderr_iid: float


def med_to_gem_experiment(mu: float, n_grid, k: int, replicates: int, seed: int) -> list:
    """Estimate expected pattern densities of MED graphs along a size grid.

    For each size N and each spectrum of k, the sampled graph's exact induced
    density (ordered distinct-vertex sampling) is averaged over replicates;
    its mean equals the GEM limit for every N >= k, so the reported gap is
    pure Monte Carlo error.  The i.i.d.-sampling (grapheme) density is also
    reported; it carries an O(1/N) repeat-collision bias and exhibits the
    actual finite-size convergence.
    """
    if k > 5:
        raise ValueError("experiment capped at k <= 5")
    targets = complete_component_targets(k)
    rows = []
    for gi, n in enumerate(n_grid):
        vals = {t.key(): [] for t in targets}
        vals_iid = {t.key(): [] for t in targets}
        for rep in range(replicates):
            rng = stream(seed, gi, rep)
            nu = sample_med_spectrum(n, mu, rng)
            w = graphon_of_spectrum(nu)
            for t in targets:
                vals[t.key()].append(spectrum_subgraph_density(nu, t))
                vals_iid[t.key()].append(block_subgraphon_density(w, t))
        for t in targets:
            exact = gem_expected_density(t, mu)
            arr = np.asarray(vals[t.key()])
            arr_iid = np.asarray(vals_iid[t.key()])
            est = float(arr.mean())
            se = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
            rows.append(
                ConvergenceRow(
                    n=n,
                    target_key=t.key(),
                    estimate=est,
                    stderr=se,
                    exact_limit=exact,
                    gap=est - exact,
                    estimate_iid=float(arr_iid.mean()),
                    stderr_iid=float(arr_iid.std(ddof=1) / math.sqrt(len(arr_iid)))
                    if len(arr_iid) > 1
                    else 0.0,
                )
            )
    return rows
