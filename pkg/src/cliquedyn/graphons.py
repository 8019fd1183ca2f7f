"""Graphon representations, subgraph densities, sampling, and entropy.

Three representations cover every graphon the dynamics touches: diagonal
block functions (clique-component graphemes, the invariant class of the
dynamics), step functions of a finite graph, and constant-level graphons
(the classic non-grapheme counterexample at level 1/2).

Densities come in two flavours: induced subgraph densities of finite graphs
(ordered samples of distinct vertices) and subgraphon densities (i.i.d.
samples from the graphon measure).  Both are computed exactly wherever the
state space allows, with seeded Monte Carlo fallbacks elsewhere.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .graphs import (
    AdjacencyMatrix,
    FrequencySpectrum,
    LabeledGraph,
    adj_of_tuple,
    components,
    is_complete_components,
    spectrum_of_graph,
)
from .partitions import labeled_graph_count, set_partitions, spectra
from .rng import stream

__all__ = [
    "TargetGraph",
    "BlockGraphon",
    "StepGraphon",
    "ConstantGraphon",
    "EntropyReport",
    "sample_graph",
    "subgraph_density",
    "subgraph_density_mc",
    "homomorphism_density",
    "homomorphism_density_mc",
    "spectrum_subgraph_density",
    "density_basis_change",
    "block_subgraphon_density",
    "constant_subgraphon_density",
    "sample_pattern_counts",
    "subgraphon_density",
    "entropy_diagnostic",
    "graphon_of_complete_graph",
    "graphon_of_spectrum",
    "partition_count",
    "all_targets",
    "complete_component_targets",
    "graphon_from_record",
    "graphon_to_record",
]


# ---------------------------------------------------------------------------
# Target patterns
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TargetGraph:
    """A labelled pattern on vertices 1..k used as a density test function."""

    k: int
    adjacency: AdjacencyMatrix

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("pattern needs at least one vertex")
        if self.adjacency.index_set != tuple(range(1, self.k + 1)):
            raise ValueError("pattern adjacency must live on labels 1..k")

    @classmethod
    def from_edges(cls, k: int, edges) -> "TargetGraph":
        return cls(k, AdjacencyMatrix.from_edges(range(1, k + 1), edges))

    @classmethod
    def from_graph(cls, g: LabeledGraph) -> "TargetGraph":
        return cls.from_edges(g.n, g.edges)

    @classmethod
    def complete(cls, k: int) -> "TargetGraph":
        return cls(k, AdjacencyMatrix.complete(range(1, k + 1)))

    @classmethod
    def empty(cls, k: int) -> "TargetGraph":
        return cls(k, AdjacencyMatrix.zero(range(1, k + 1)))

    def graph(self) -> LabeledGraph:
        edges = set()
        a = self.adjacency.entries
        for p in range(self.k):
            for q in range(p + 1, self.k):
                if a[p, q]:
                    edges.add((p + 1, q + 1))
        return LabeledGraph(self.k, frozenset(edges))

    def edge_count(self) -> int:
        return int(self.adjacency.entries.sum()) // 2

    def component_sizes(self) -> list:
        return sorted((len(c) for c in components(self.graph())), reverse=True)

    def is_complete_components(self) -> bool:
        return is_complete_components(self.graph())

    def key(self) -> str:
        bits = "".join(
            str(int(self.adjacency.entries[p, q]))
            for p in range(self.k)
            for q in range(p + 1, self.k)
        )
        return f"k{self.k}:{bits}"


def all_targets(k: int) -> list:
    """All labelled patterns on 1..k (2^C(k,2) of them)."""
    pairs = list(itertools.combinations(range(1, k + 1), 2))
    out = []
    for bits in itertools.product((0, 1), repeat=len(pairs)):
        edges = [pairs[i] for i, b in enumerate(bits) if b]
        out.append(TargetGraph.from_edges(k, edges))
    return out


def complete_component_targets(k: int) -> list:
    """All labelled clique-component patterns on 1..k."""
    out = []
    for part in set_partitions(list(range(1, k + 1))):
        edges = []
        for block in part:
            edges.extend(itertools.combinations(sorted(block), 2))
        out.append(TargetGraph.from_edges(k, edges))
    out.sort(key=lambda t: t.key())
    return out


# ---------------------------------------------------------------------------
# Graphon representations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BlockGraphon:
    """Diagonal block function: non-increasing block sizes, remainder is dust.

    Dust is a continuum of isolated points (the function vanishes there), so
    sampled dust points are mutually non-adjacent singletons.
    """

    block_sizes: tuple

    def __post_init__(self):
        sizes = tuple(float(a) for a in self.block_sizes)
        for a in sizes:
            if a <= 0:
                raise ValueError("block sizes must be positive")
        if any(sizes[i] < sizes[i + 1] for i in range(len(sizes) - 1)):
            raise ValueError("block sizes must be non-increasing")
        if sum(sizes) > 1.0 + 1e-12:
            raise ValueError(f"block sizes sum to {sum(sizes)} > 1")
        object.__setattr__(self, "block_sizes", sizes)

    @property
    def dust(self) -> float:
        return max(0.0, 1.0 - sum(self.block_sizes))


@dataclass(frozen=True)
class StepGraphon:
    """Step-function graphon of a finite graph with uniform vertex atoms."""

    source: LabeledGraph


@dataclass(frozen=True)
class ConstantGraphon:
    """Constant-level graphon: every pair is adjacent with probability p."""

    p: float

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise ValueError(f"level must be in [0,1], got {self.p}")


def graphon_of_complete_graph(g: LabeledGraph) -> BlockGraphon:
    """Block representation of a clique-component graph: sizes / n."""
    if not is_complete_components(g):
        raise ValueError("graph does not have complete components")
    sizes = spectrum_of_graph(g).sizes()
    return BlockGraphon(tuple(s / g.n for s in sizes))


def graphon_of_spectrum(nu: FrequencySpectrum) -> BlockGraphon:
    return BlockGraphon(tuple(s / nu.total for s in nu.sizes()))


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return stream(int(seed), 0)


def sample_graph(w, k: int, seed) -> LabeledGraph:
    """Draw the random k-graph of the representation: sample k latent points
    i.i.d. from the measure, then connect pairs with probability W(x_i, x_j)."""
    if k < 1:
        raise ValueError("sample size must be >= 1")
    rng = _as_rng(seed)
    edges = set()
    if isinstance(w, BlockGraphon):
        bounds = np.cumsum(w.block_sizes)
        us = rng.random(k)
        # block index per point; points past the last boundary are dust
        idx = np.searchsorted(bounds, us, side="right")
        for p in range(k):
            for q in range(p + 1, k):
                if idx[p] == idx[q] and idx[p] < len(w.block_sizes):
                    edges.add((p + 1, q + 1))
    elif isinstance(w, StepGraphon):
        g = w.source
        verts = rng.integers(1, g.n + 1, size=k)
        for p in range(k):
            for q in range(p + 1, k):
                if verts[p] != verts[q] and g.has_edge(int(verts[p]), int(verts[q])):
                    edges.add((p + 1, q + 1))
    elif isinstance(w, ConstantGraphon):
        for p in range(k):
            for q in range(p + 1, k):
                if rng.random() < w.p:
                    edges.add((p + 1, q + 1))
    else:
        raise TypeError(f"unknown graphon representation {type(w)!r}")
    return LabeledGraph(k, frozenset(edges))


# ---------------------------------------------------------------------------
# Densities of finite graphs (ordered samples of distinct vertices)
# ---------------------------------------------------------------------------

_EXACT_DENSITY_MAX_N = 12


def _matches_induced(g: LabeledGraph, f: TargetGraph, phi) -> bool:
    a = f.adjacency.entries
    for p in range(f.k):
        for q in range(p + 1, f.k):
            if g.has_edge(phi[p], phi[q]) != bool(a[p, q]):
                return False
    return True


def _matches_hom(g: LabeledGraph, f: TargetGraph, phi) -> bool:
    a = f.adjacency.entries
    for p in range(f.k):
        for q in range(p + 1, f.k):
            if a[p, q] and not g.has_edge(phi[p], phi[q]):
                return False
    return True


def _density_exact(g: LabeledGraph, f: TargetGraph, match) -> float:
    if f.k > g.n:
        warnings.warn(
            f"pattern on {f.k} vertices cannot inject into {g.n} vertices; density is 0",
            stacklevel=3,
        )
        return 0.0
    if g.n > _EXACT_DENSITY_MAX_N:
        raise ValueError(
            f"exact enumeration capped at n <= {_EXACT_DENSITY_MAX_N}; "
            "use the *_mc variant"
        )
    hits = 0
    total = 0
    for phi in itertools.permutations(range(1, g.n + 1), f.k):
        total += 1
        if match(g, f, phi):
            hits += 1
    return hits / total


def _density_mc(g, f, match, samples, seed):
    if f.k > g.n:
        warnings.warn(
            f"pattern on {f.k} vertices cannot inject into {g.n} vertices; density is 0",
            stacklevel=3,
        )
        return 0.0, 0.0
    rng = _as_rng(seed)
    verts = np.arange(1, g.n + 1)
    hits = 0
    for _ in range(samples):
        phi = tuple(rng.choice(verts, size=f.k, replace=False))
        if match(g, f, phi):
            hits += 1
    p = hits / samples
    return p, math.sqrt(max(p * (1 - p), 1e-300) / samples)


def subgraph_density(g: LabeledGraph, f: TargetGraph) -> float:
    """Induced density: fraction of ordered injections matching the pattern
    on edges AND non-edges (exact enumeration, g.n <= 12)."""
    return _density_exact(g, f, _matches_induced)


def subgraph_density_mc(g: LabeledGraph, f: TargetGraph, samples: int, seed) -> tuple:
    """Monte Carlo induced density for large graphs: (estimate, stderr)."""
    return _density_mc(g, f, _matches_induced, samples, seed)


def homomorphism_density(g: LabeledGraph, f: TargetGraph) -> float:
    """Injective homomorphism density: non-edges of the pattern unconstrained."""
    return _density_exact(g, f, _matches_hom)


def homomorphism_density_mc(g: LabeledGraph, f: TargetGraph, samples: int, seed) -> tuple:
    return _density_mc(g, f, _matches_hom, samples, seed)


def density_basis_change(f: TargetGraph) -> list:
    """Induced density as a signed sum of homomorphism densities.

    Returns [(pattern, coeff)] with the pattern ranging over all supergraphs
    of f on the same vertex set and coeff = (-1)^(added edges).
    """
    if f.k > 5:
        raise ValueError("basis change capped at k <= 5")
    present = set(f.graph().edges)
    missing = [
        pair
        for pair in itertools.combinations(range(1, f.k + 1), 2)
        if pair not in present
    ]
    out = []
    for r in range(len(missing) + 1):
        for extra in itertools.combinations(missing, r):
            sup = TargetGraph.from_edges(f.k, sorted(present | set(extra)))
            out.append((sup, (-1) ** r))
    return out


# ---------------------------------------------------------------------------
# Exact clique-component densities via injective assignment sums
# ---------------------------------------------------------------------------

def _falling(c: float, s: int) -> float:
    out = 1.0
    for r in range(s):
        out *= c - r
    return out


def _assignment_sum(item_sizes, groups, weight, dust_weight=None) -> float:
    """Sum over injective assignments of items to hosts.

    ``groups`` is [(value, multiplicity)]: multiplicity identical hosts per
    value.  ``weight(value, s)`` is the factor for an item of size s placed on
    such a host.  If ``dust_weight`` is given, size-1 items may additionally
    (non-injectively) go to dust at that weight per item.
    """
    n_items = len(item_sizes)
    n_masks = 1 << n_items
    dp = np.zeros(n_masks)
    dp[0] = 1.0
    for (value, mult) in groups:
        wts = [weight(value, s) for s in item_sizes]
        if mult == 1:
            # a single host takes at most one item
            ndp = dp.copy()
            for t in range(n_items):
                bit = 1 << t
                if wts[t] == 0.0:
                    continue
                for mask in range(n_masks):
                    if dp[mask] and not mask & bit:
                        ndp[mask | bit] += dp[mask] * wts[t]
            dp = ndp
        else:
            ndp = dp.copy()
            for mask in range(n_masks):
                if not dp[mask]:
                    continue
                free = [t for t in range(n_items) if not mask & (1 << t)]
                for r in range(1, min(len(free), mult) + 1):
                    perm_mult = _falling(mult, r)
                    for combo in itertools.combinations(free, r):
                        w = perm_mult
                        sub = mask
                        for t in combo:
                            w *= wts[t]
                            sub |= 1 << t
                        if w:
                            ndp[sub] += dp[mask] * w
            dp = ndp
    total = 0.0
    for mask in range(n_masks):
        if not dp[mask]:
            continue
        rest = [t for t in range(n_items) if not mask & (1 << t)]
        if not rest:
            total += dp[mask]
        elif dust_weight is not None and all(item_sizes[t] == 1 for t in rest):
            total += dp[mask] * dust_weight ** len(rest)
    return float(total)


def spectrum_subgraph_density(nu: FrequencySpectrum, f: TargetGraph) -> float:
    """Induced density of a labelled pattern in any clique-component graph
    with spectrum nu (closed form; no graph enumeration)."""
    if not f.is_complete_components():
        return 0.0
    n, k = nu.total, f.k
    if k > n:
        return 0.0
    total = _assignment_sum(
        f.component_sizes(),
        list(nu.counts),
        lambda c, s: _falling(c, s) if c >= s else 0.0,
    )
    return total / _falling(n, k)


def block_subgraphon_density(w: BlockGraphon, f: TargetGraph) -> float:
    """Exact i.i.d.-sampling density of a labelled pattern in a block graphon.

    Zero unless the pattern has complete components; otherwise a sum over
    injective assignments of components to blocks, singleton components also
    allowed in dust, each factor (assigned mass)^(component size).
    """
    if not f.is_complete_components():
        return 0.0
    groups = [(a, 1) for a in w.block_sizes]
    return _assignment_sum(
        f.component_sizes(), groups, lambda a, s: a ** s, dust_weight=w.dust
    )


def constant_subgraphon_density(p: float, f: TargetGraph) -> float:
    """Density under the constant-level graphon: p^|E| (1-p)^(C(k,2)-|E|)."""
    m = f.k * (f.k - 1) // 2
    e = f.edge_count()
    return p ** e * (1.0 - p) ** (m - e)


def sample_pattern_counts(w: BlockGraphon, k: int, samples: int, seed) -> dict:
    """Vectorized sampling of G(k, w): counts of induced patterns by key.

    Dust points receive per-coordinate sentinel labels so two dust points are
    never adjacent.  Used to cross-check the exact densities by chi-squared.
    """
    rng = _as_rng(seed)
    bounds = np.cumsum(w.block_sizes)
    idx = np.searchsorted(bounds, rng.random((samples, k)), side="right").astype(np.int64)
    nb = len(w.block_sizes)
    cols = np.broadcast_to(np.arange(k), (samples, k))
    idx = np.where(idx >= nb, -1 - cols, idx)
    pairs = list(itertools.combinations(range(k), 2))
    codes = np.zeros(samples, dtype=np.int64)
    for b, (p, q) in enumerate(pairs):
        codes |= (idx[:, p] == idx[:, q]).astype(np.int64) << b
    counts = np.bincount(codes, minlength=1 << len(pairs))
    out = {}
    for code in range(1 << len(pairs)):
        if counts[code]:
            edges = [
                (p + 1, q + 1) for b, (p, q) in enumerate(pairs) if code >> b & 1
            ]
            out[TargetGraph.from_edges(k, edges).key()] = int(counts[code])
    return out


def subgraphon_density(w, f: TargetGraph) -> float:
    """Exact i.i.d.-sampling density under any supported representation."""
    if isinstance(w, BlockGraphon):
        return block_subgraphon_density(w, f)
    if isinstance(w, ConstantGraphon):
        return constant_subgraphon_density(w.p, f)
    if isinstance(w, StepGraphon):
        g = w.source
        # i.i.d. vertex atoms: average the exact matching indicator over all
        # k-tuples with repetition (repeated atoms are never adjacent)
        hits = 0
        a = f.adjacency.entries
        for tup in itertools.product(range(1, g.n + 1), repeat=f.k):
            ok = True
            for p in range(f.k):
                for q in range(p + 1, f.k):
                    adj = tup[p] != tup[q] and g.has_edge(tup[p], tup[q])
                    if adj != bool(a[p, q]):
                        ok = False
                        break
                if not ok:
                    break
            hits += ok
        return hits / g.n ** f.k
    raise TypeError(f"unknown graphon representation {type(w)!r}")


# ---------------------------------------------------------------------------
# Entropy diagnostic and partition asymptotics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EntropyReport:
    """Entropy of the sampled k-graph and its k^2-normalized value."""

    k: int
    entropy: float
    normalized: float


def _h(x: float) -> float:
    return -x * math.log(x) if x > 0.0 else 0.0


def entropy_diagnostic(w, k: int, samples: int = 0, seed: int = 0) -> EntropyReport:
    """Entropy of the random k-graph sampled from the representation.

    Block graphons sum exactly over clique-component patterns grouped by
    spectrum; constant graphons use the closed form; step graphons fall back
    to a Monte Carlo plug-in estimate (biased low for rare patterns).
    """
    if isinstance(w, BlockGraphon):
        if k > 7:
            raise ValueError("exact block entropy capped at k <= 7")
        ent = 0.0
        for nu in spectra(k):
            edges = []
            start = 1
            for size in nu.sizes():
                edges.extend(itertools.combinations(range(start, start + size), 2))
                start += size
            t = block_subgraphon_density(w, TargetGraph.from_edges(k, edges))
            ent += labeled_graph_count(nu) * _h(t)
    elif isinstance(w, ConstantGraphon):
        m = k * (k - 1) / 2.0
        p = w.p
        ent = m * (_h(p) + _h(1.0 - p))
    elif isinstance(w, StepGraphon):
        if samples <= 0:
            raise ValueError("step-graphon entropy needs a Monte Carlo sample count")
        rng = _as_rng(seed)
        freq: dict = {}
        for _ in range(samples):
            key = sample_graph(w, k, rng).key()
            freq[key] = freq.get(key, 0) + 1
        ent = sum(_h(c / samples) for c in freq.values())
    else:
        raise TypeError(f"unknown graphon representation {type(w)!r}")
    return EntropyReport(k, ent, ent / k ** 2)


def entropy_bound(k: int) -> float:
    """Partition-counting entropy bound pi*sqrt(2k/3) + k*log(k)."""
    return math.pi * math.sqrt(2 * k / 3.0) + k * math.log(k)


def partition_count(k: int) -> tuple:
    """Exact number of partitions of k (pentagonal recurrence) and its ratio
    to the asymptotic form exp(pi sqrt(2k/3)) / (4 k sqrt(3))."""
    if k < 0 or k > 200:
        raise ValueError("partition count supported for 0 <= k <= 200")
    p = [1] + [0] * k
    for n in range(1, k + 1):
        total = 0
        j = 1
        while True:
            for g in (j * (3 * j - 1) // 2, j * (3 * j + 1) // 2):
                if g > n:
                    break
                total += (-1) ** (j + 1) * p[n - g]
            if j * (3 * j - 1) // 2 > n:
                break
            j += 1
        p[n] = total
    asym = math.exp(math.pi * math.sqrt(2 * k / 3.0)) / (4.0 * k * math.sqrt(3.0)) if k else 1.0
    return p[k], p[k] / asym


# ---------------------------------------------------------------------------
# Fixture records
# ---------------------------------------------------------------------------

def graphon_to_record(w) -> dict:
    if isinstance(w, BlockGraphon):
        return {"kind": "block", "block_sizes": list(w.block_sizes)}
    if isinstance(w, StepGraphon):
        return {
            "kind": "step",
            "n": w.source.n,
            "edges": sorted(list(e) for e in w.source.edges),
        }
    if isinstance(w, ConstantGraphon):
        return {"kind": "constant", "p": w.p}
    raise TypeError(f"unknown graphon representation {type(w)!r}")


def graphon_from_record(rec: dict):
    kind = rec.get("kind")
    if kind == "block":
        return BlockGraphon(tuple(rec["block_sizes"]))
    if kind == "step":
        edges = frozenset(tuple(e) for e in rec["edges"])
        return StepGraphon(LabeledGraph(int(rec["n"]), edges))
    if kind == "constant":
        return ConstantGraphon(float(rec["p"]))
    raise ValueError(f"unknown graphon record kind {kind!r}")
