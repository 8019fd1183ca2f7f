"""Joint Poisson-driven construction of the poaching chain and the Moran
model, preserving spectrum equality at every event time.

The same driving marks feed both processes: a replacement mark (i, j) applies
the clone move to the type vector and the corresponding poach move to the
graph; a mutation mark (i) applies a fresh uniform type and the corresponding
self-employment move.  A vertex-to-individual bijection matching components
to type classes is fixed at time zero.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

from .chains import SamplePath
from .graphs import (
    LabeledGraph,
    TypeVector,
    components,
    isolate,
    poach,
    spectrum_of_graph,
    spectrum_of_types,
)
from .rng import stream

__all__ = [
    "DrivingNoise",
    "Mark",
    "generate_noise",
    "coupled_paths",
    "verify_coupling_invariant",
    "ancestral_types",
    "match_vertices_to_individuals",
]


@dataclass(frozen=True)
class Mark:
    """One driving event; replacement marks carry (i, j), mutations only i."""

    time: float
    kind: str  # "replace" | "mutate"
    i: int
    j: int | None


@dataclass(frozen=True)
class DrivingNoise:
    """Poisson marks and mutation types driving one coupled run.

    pi1 holds per ordered pair (i, j) the times at which i overwrites j's
    type; pi2 the per-individual mutation times; k_types the uniform type
    created by each individual's successive mutations.
    """

    n: int
    mu: float
    t_end: float
    seed: int
    pi1: dict
    pi2: dict
    k_types: dict

    def marks(self) -> list:
        """All marks merged in time order (ties broken by kind then index)."""
        out = []
        for (i, j), times in self.pi1.items():
            out.extend(Mark(float(t), "replace", i, j) for t in times)
        for i, times in self.pi2.items():
            out.extend(Mark(float(t), "mutate", i, None) for t in times)
        out.sort(key=lambda m: (m.time, m.kind, m.i, m.j if m.j is not None else 0))
        return out


def generate_noise(n: int, mu: float, t_end: float, seed: int) -> DrivingNoise:
    """Rate-1 Poisson processes per ordered pair and rate-mu per individual,
    reproducible from the seed."""
    if t_end < 0:
        raise ValueError("t_end must be >= 0")
    pi1: dict = {}
    pi2: dict = {}
    k_types: dict = {}
    sid = 0
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i == j:
                continue
            rng = stream(seed, 1, sid)
            sid += 1
            count = rng.poisson(t_end)
            pi1[(i, j)] = np.sort(rng.random(count)) * t_end
    for i in range(1, n + 1):
        rng = stream(seed, 2, i)
        count = rng.poisson(mu * t_end) if mu > 0 else 0
        pi2[i] = np.sort(rng.random(count)) * t_end
        k_types[i] = stream(seed, 3, i).random(max(len(pi2[i]), 1))
    return DrivingNoise(n, mu, t_end, seed, pi1, pi2, k_types)


def match_vertices_to_individuals(g0: LabeledGraph, y0: TypeVector) -> dict:
    """A bijection gamma: vertex -> individual sending components onto type
    classes of equal size; exists iff the two spectra agree."""
    if spectrum_of_graph(g0) != spectrum_of_types(y0):
        raise ValueError("graph spectrum and type spectrum differ at time 0")
    comp_list = sorted((sorted(c) for c in components(g0)), key=lambda c: (len(c), c))
    classes: dict = {}
    for idx, val in enumerate(y0.values, start=1):
        classes.setdefault(val, []).append(idx)
    class_list = sorted(classes.values(), key=lambda c: (len(c), c))
    gamma: dict = {}
    for comp, cls in zip(comp_list, class_list):
        if len(comp) != len(cls):
            raise ValueError("component/class size mismatch")
        for v, ind in zip(comp, cls):
            gamma[v] = ind
    return gamma


def coupled_paths(g0: LabeledGraph, y0: TypeVector, noise: DrivingNoise) -> tuple:
    """Run both processes off the same driving noise.

    Returns (graph_path, type_path); both record a state after every mark
    (including marks that leave the state unchanged), so the coupling
    invariant can be checked mark by mark via ``verify_coupling_invariant``.
    """
    if g0.n != noise.n or y0.n != noise.n:
        raise ValueError("initial states must match the noise dimension")
    gamma = match_vertices_to_individuals(g0, y0)
    inv_gamma = {ind: v for v, ind in gamma.items()}
    mutation_counts = {i: 0 for i in range(1, noise.n + 1)}
    g, y = g0, list(y0.values)
    g_times, g_states = [], [g0]
    y_times, y_states = [], [y0]
    for mark in noise.marks():
        if mark.kind == "replace":
            y[mark.j - 1] = y[mark.i - 1]
            g = poach(g, inv_gamma[mark.i], inv_gamma[mark.j])
        else:
            mutation_counts[mark.i] += 1
            y[mark.i - 1] = float(noise.k_types[mark.i][mutation_counts[mark.i] - 1])
            g = isolate(g, inv_gamma[mark.i])
        g_times.append(mark.time)
        g_states.append(g)
        y_times.append(mark.time)
        y_states.append(TypeVector(tuple(y)))
    return (
        SamplePath(g_times, g_states, noise.t_end, noise.seed),
        SamplePath(y_times, y_states, noise.t_end, noise.seed),
    )


def verify_coupling_invariant(graph_path: SamplePath, type_path: SamplePath) -> tuple:
    """Check spectrum equality at time 0, after every event, and at the end.

    Returns (ok, first_violation_time); the time is None when ok.
    """
    if len(graph_path.states) != len(type_path.states):
        return False, 0.0
    for idx, (g, y) in enumerate(zip(graph_path.states, type_path.states)):
        if spectrum_of_graph(g) != spectrum_of_types(y):
            t = graph_path.jump_times[idx - 1] if idx else 0.0
            return False, t
    if graph_path.t_end != type_path.t_end:
        return False, graph_path.t_end
    return True, None


def ancestral_types(noise: DrivingNoise, y0: TypeVector, t: float) -> TypeVector:
    """Type vector at time t reconstructed by earliest-ancestor lookup.

    Tracing back from (i, t): the latest incoming replacement mark routes the
    lineage to its source individual strictly before the mark; a mutation
    mark ends the trace with that individual's n-th created type, n counting
    the mark itself; reaching time 0 yields the initial type.  Agrees with
    the forward construction in ``coupled_paths``.
    """
    if not (0.0 <= t <= noise.t_end):
        raise ValueError("query time outside the noise horizon")
    incoming: dict = {i: [] for i in range(1, noise.n + 1)}
    for (src, dst), times in noise.pi1.items():
        for s in times:
            incoming[dst].append((float(s), "replace", src))
    for i, times in noise.pi2.items():
        for s in times:
            incoming[i].append((float(s), "mutate", i))
    for i in incoming:
        incoming[i].sort()
    out = []
    for i in range(1, noise.n + 1):
        cur, cur_t, inclusive = i, t, True
        while True:
            events = incoming[cur]
            ts = [e[0] for e in events]
            pos = (
                bisect.bisect_right(ts, cur_t) if inclusive else bisect.bisect_left(ts, cur_t)
            )
            if pos == 0:
                out.append(y0.values[cur - 1])
                break
            s, kind, src = events[pos - 1]
            if kind == "mutate":
                n_mut = bisect.bisect_right(noise.pi2[cur], s)
                out.append(float(noise.k_types[cur][n_mut - 1]))
                break
            cur, cur_t, inclusive = src, s, False
    return TypeVector(tuple(out))
