"""Core graph data types and elementary move operators.

Three finite-state pictures of the same dynamics share these types: labelled
graphs on vertex set 1..N, 0/1 adjacency matrices on an index set, and the
component-size (frequency) spectrum.  All types are immutable and all
operations are pure functions, so values can be shared freely across workers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModelParams",
    "LabeledGraph",
    "AdjacencyMatrix",
    "FrequencySpectrum",
    "TypeVector",
    "components",
    "spectrum_of_graph",
    "spectrum_of_types",
    "is_complete_components",
    "adj_of_tuple",
    "duplicate",
    "ground",
    "delete_index",
    "poach",
    "isolate",
    "isomorphism_key",
    "graph_to_edge_list",
    "graph_from_edge_list",
    "adjacency_to_text",
    "adjacency_from_text",
]


@dataclass(frozen=True)
class ModelParams:
    """Model parameters: mutation/self-employment/grounding rate and size."""

    mu: float
    n: int

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError(f"mu must be >= 0, got {self.mu}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")


def _normalize_edge(u: int, v: int) -> tuple[int, int]:
    if u == v:
        raise ValueError(f"self-loop {u} not allowed")
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class LabeledGraph:
    """Undirected labelled graph on vertices 1..n (no self-loops)."""

    n: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("graph needs at least one vertex")
        norm = frozenset(_normalize_edge(u, v) for (u, v) in self.edges)
        for (u, v) in norm:
            if not (1 <= u <= self.n and 1 <= v <= self.n):
                raise ValueError(f"edge ({u},{v}) outside 1..{self.n}")
        object.__setattr__(self, "edges", norm)

    def has_edge(self, u: int, v: int) -> bool:
        return _normalize_edge(u, v) in self.edges

    def neighbors(self, v: int) -> set:
        return {b if a == v else a for (a, b) in self.edges if v in (a, b)}

    def key(self) -> tuple:
        """Hashable canonical identity of the labelled graph."""
        return (self.n, tuple(sorted(self.edges)))


@dataclass(frozen=True)
class AdjacencyMatrix:
    """Symmetric 0/1 matrix with zero diagonal on a sorted index set."""

    index_set: tuple
    entries: np.ndarray

    def __post_init__(self):
        idx = tuple(sorted(self.index_set))
        if len(set(idx)) != len(idx) or not idx:
            raise ValueError("index set must be non-empty and duplicate-free")
        a = np.asarray(self.entries, dtype=np.int8).copy()
        m = len(idx)
        if a.shape != (m, m):
            raise ValueError(f"entries must be {m}x{m}, got {a.shape}")
        if not np.array_equal(a, a.T):
            raise ValueError("entries must be symmetric")
        if np.any(np.diag(a) != 0):
            raise ValueError("diagonal must be zero")
        if not np.all((a == 0) | (a == 1)):
            raise ValueError("entries must be 0/1")
        a.flags.writeable = False
        object.__setattr__(self, "index_set", idx)
        object.__setattr__(self, "entries", a)

    @property
    def size(self) -> int:
        return len(self.index_set)

    def position(self, i: int) -> int:
        """Array position of index label i."""
        try:
            return self.index_set.index(i)
        except ValueError:
            raise ValueError(f"index {i} not in index set {self.index_set}") from None

    def key(self) -> tuple:
        return (self.index_set, self.entries.tobytes())

    @classmethod
    def zero(cls, index_set) -> "AdjacencyMatrix":
        m = len(tuple(index_set))
        return cls(tuple(index_set), np.zeros((m, m), dtype=np.int8))

    @classmethod
    def complete(cls, index_set) -> "AdjacencyMatrix":
        idx = tuple(index_set)
        m = len(idx)
        a = np.ones((m, m), dtype=np.int8) - np.eye(m, dtype=np.int8)
        return cls(idx, a)

    @classmethod
    def from_edges(cls, index_set, edges) -> "AdjacencyMatrix":
        idx = tuple(sorted(index_set))
        pos = {lab: p for p, lab in enumerate(idx)}
        a = np.zeros((len(idx), len(idx)), dtype=np.int8)
        for (u, v) in edges:
            a[pos[u], pos[v]] = 1
            a[pos[v], pos[u]] = 1
        return cls(idx, a)


@dataclass(frozen=True)
class FrequencySpectrum:
    """Integer measure on sizes k >= 1 with sum_k k*counts[k] = total."""

    counts: tuple  # sorted tuple of (size, multiplicity) pairs, multiplicity > 0
    total: int

    def __post_init__(self):
        pairs = tuple(sorted((int(k), int(m)) for (k, m) in self.counts if m))
        for (k, m) in pairs:
            if k < 1 or m < 1:
                raise ValueError(f"invalid spectrum entry ({k},{m})")
        if sum(k * m for (k, m) in pairs) != self.total:
            raise ValueError(
                f"spectrum {pairs} does not sum to total {self.total}"
            )
        object.__setattr__(self, "counts", pairs)

    @classmethod
    def from_dict(cls, counts: dict, total: int | None = None) -> "FrequencySpectrum":
        pairs = tuple(sorted((k, m) for k, m in counts.items() if m))
        if total is None:
            total = sum(k * m for k, m in pairs)
        return cls(pairs, total)

    def get(self, k: int) -> int:
        for (size, mult) in self.counts:
            if size == k:
                return mult
        return 0

    def as_dict(self) -> dict:
        return dict(self.counts)

    def sizes(self) -> list:
        """Component sizes as a sorted multiset, largest first."""
        out = []
        for (k, m) in self.counts:
            out.extend([k] * m)
        out.sort(reverse=True)
        return out

    def n_blocks(self) -> int:
        return sum(m for (_, m) in self.counts)

    def key(self) -> tuple:
        return self.counts


@dataclass(frozen=True)
class TypeVector:
    """Genetic types of an N-population, values in [0,1]."""

    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("population must be non-empty")
        for v in vals:
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"type {v} outside [0,1]")
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return len(self.values)


# ---------------------------------------------------------------------------
# Elementary maps
# ---------------------------------------------------------------------------

def components(g: LabeledGraph) -> list:
    """Connected components as vertex sets, sorted by smallest member."""
    seen = set()
    comps = []
    adj = {v: set() for v in range(1, g.n + 1)}
    for (u, v) in g.edges:
        adj[u].add(v)
        adj[v].add(u)
    for start in range(1, g.n + 1):
        if start in seen:
            continue
        comp = {start}
        frontier = [start]
        while frontier:
            v = frontier.pop()
            for w in adj[v]:
                if w not in comp:
                    comp.add(w)
                    frontier.append(w)
        seen |= comp
        comps.append(comp)
    comps.sort(key=min)
    return comps


def spectrum_of_graph(g: LabeledGraph) -> FrequencySpectrum:
    """Component-size spectrum: counts[k] = number of k-vertex components."""
    counts: dict = {}
    for comp in components(g):
        counts[len(comp)] = counts.get(len(comp), 0) + 1
    return FrequencySpectrum.from_dict(counts, g.n)


def spectrum_of_types(x: TypeVector) -> FrequencySpectrum:
    """Type-multiplicity spectrum: counts[k] = number of types held k times."""
    mult: dict = {}
    for v in x.values:
        mult[v] = mult.get(v, 0) + 1
    counts: dict = {}
    for m in mult.values():
        counts[m] = counts.get(m, 0) + 1
    return FrequencySpectrum.from_dict(counts, x.n)


def is_complete_components(g: LabeledGraph) -> bool:
    """True iff every connected component is a complete graph.

    Equivalently, adjacency extended with equality is an equivalence relation:
    it suffices that each vertex's neighbourhood is a clique.
    """
    adj = {v: g.neighbors(v) for v in range(1, g.n + 1)}
    for v, nbrs in adj.items():
        for u, w in itertools.combinations(sorted(nbrs), 2):
            if w not in adj[u]:
                return False
    return True


def adj_of_tuple(g: LabeledGraph, xs, index_set) -> AdjacencyMatrix:
    """Adjacency matrix on ``index_set`` generated by the vertex tuple ``xs``."""
    xs = tuple(xs)
    idx = tuple(sorted(index_set))
    if len(set(xs)) != len(xs):
        raise ValueError(f"vertex tuple {xs} has duplicate labels")
    if len(xs) != len(idx):
        raise ValueError("vertex tuple and index set must have equal length")
    for x in xs:
        if not (1 <= x <= g.n):
            raise ValueError(f"label {x} outside 1..{g.n}")
    m = len(idx)
    a = np.zeros((m, m), dtype=np.int8)
    for p in range(m):
        for q in range(p + 1, m):
            if g.has_edge(xs[p], xs[q]):
                a[p, q] = 1
                a[q, p] = 1
    return AdjacencyMatrix(idx, a)


# ---------------------------------------------------------------------------
# Move operators
# ---------------------------------------------------------------------------

def duplicate(a: AdjacencyMatrix, i: int, j: int) -> AdjacencyMatrix:
    """Clone index i onto index j: row/column j becomes a copy of row/column i,
    the (i,j) entry becomes 1, and the diagonal stays 0."""
    if i == j:
        raise ValueError("duplicate requires i != j")
    pi, pj = a.position(i), a.position(j)
    out = np.array(a.entries, dtype=np.int8)
    row = np.array(a.entries[pi], dtype=np.int8)
    row[pi] = 1  # j attaches to its template i
    row[pj] = 0  # diagonal of the image
    out[pj, :] = row
    out[:, pj] = row
    return AdjacencyMatrix(a.index_set, out)


def ground(a: AdjacencyMatrix, i: int) -> AdjacencyMatrix:
    """Zero out row and column i."""
    pi = a.position(i)
    out = np.array(a.entries, dtype=np.int8)
    out[pi, :] = 0
    out[:, pi] = 0
    return AdjacencyMatrix(a.index_set, out)


def delete_index(a: AdjacencyMatrix, j: int) -> AdjacencyMatrix:
    """Erase row and column j, shrinking the index set."""
    if a.size < 2:
        raise ValueError("cannot delete the last index")
    pj = a.position(j)
    keep = [p for p in range(a.size) if p != pj]
    idx = tuple(lab for lab in a.index_set if lab != j)
    return AdjacencyMatrix(idx, a.entries[np.ix_(keep, keep)])


def poach(g: LabeledGraph, v1: int, v2: int) -> LabeledGraph:
    """Vertex v1 poaches v2: v2 drops all its edges, then connects to v1 and
    to every other neighbour of v1."""
    if v1 == v2:
        raise ValueError("poach requires v1 != v2")
    nbrs = g.neighbors(v1) - {v2}
    edges = {e for e in g.edges if v2 not in e}
    edges.add(_normalize_edge(v1, v2))
    edges.update(_normalize_edge(v2, w) for w in nbrs)
    return LabeledGraph(g.n, frozenset(edges))


def isolate(g: LabeledGraph, v: int) -> LabeledGraph:
    """Vertex v becomes self-employed: all its edges are dropped."""
    return LabeledGraph(g.n, frozenset(e for e in g.edges if v not in e))


# ---------------------------------------------------------------------------
# Canonical form
# ---------------------------------------------------------------------------

_MAX_CANONICAL_N = 9


def isomorphism_key(g: LabeledGraph) -> bytes:
    """Canonical byte string: equal keys iff the graphs are isomorphic.

    Graphs with complete components are keyed by their sorted component-size
    multiset (sufficient there).  General graphs are keyed by minimising the
    adjacency bit-string over all vertex permutations, feasible for n <= 9.
    """
    if is_complete_components(g):
        sizes = spectrum_of_graph(g).sizes()
        return b"C" + b",".join(str(s).encode() for s in sizes)
    if g.n > _MAX_CANONICAL_N:
        raise ValueError(
            f"canonical form of a general graph needs n <= {_MAX_CANONICAL_N}, got {g.n}"
        )
    verts = range(1, g.n + 1)
    pair_pos = {pair: p for p, pair in enumerate(itertools.combinations(verts, 2))}
    best = None
    for perm in itertools.permutations(verts):
        relabel = {v: perm[v - 1] for v in verts}
        bits = bytearray(len(pair_pos))
        for (u, v) in g.edges:
            bits[pair_pos[_normalize_edge(relabel[u], relabel[v])]] = 1
        key = bytes(bits)
        if best is None or key < best:
            best = key
    return b"G" + best


# ---------------------------------------------------------------------------
# Text serialization
# ---------------------------------------------------------------------------

def graph_to_edge_list(g: LabeledGraph) -> str:
    lines = [f"N={g.n}"]
    lines.extend(f"{u} {v}" for (u, v) in sorted(g.edges))
    return "\n".join(lines) + "\n"


def graph_from_edge_list(text: str) -> LabeledGraph:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("N="):
        raise ValueError("edge list must start with a 'N=<n>' header")
    n = int(lines[0][2:])
    edges = set()
    for ln in lines[1:]:
        u, v = ln.split()
        edges.add(_normalize_edge(int(u), int(v)))
    return LabeledGraph(n, frozenset(edges))


def adjacency_to_text(a: AdjacencyMatrix) -> str:
    lines = ["XI=" + " ".join(str(i) for i in a.index_set)]
    lines.extend(" ".join(str(int(x)) for x in row) for row in a.entries)
    return "\n".join(lines) + "\n"


def adjacency_from_text(text: str) -> AdjacencyMatrix:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("XI="):
        raise ValueError("adjacency text must start with a 'XI=<labels>' header")
    idx = tuple(int(t) for t in lines[0][3:].split())
    rows = [[int(t) for t in ln.split()] for ln in lines[1:]]
    return AdjacencyMatrix(idx, np.array(rows, dtype=np.int8))
