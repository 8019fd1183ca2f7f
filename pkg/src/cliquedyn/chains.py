"""Event enumerators for the three Markov chains and a generic exact
continuous-time simulation engine.

The poaching chain acts on labelled graphs, the duplication/grounding chain
on adjacency matrices, the Moran chain on type vectors, and the frequency
chain on component-size spectra.  Events that do not change the state are
kept in the rate enumeration (the generator algebra needs their rates) but
the simulator records only actual jumps.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from .graphs import (
    AdjacencyMatrix,
    FrequencySpectrum,
    LabeledGraph,
    ModelParams,
    TypeVector,
    duplicate,
    ground,
    isolate,
    poach,
)
from .rng import stream

__all__ = [
    "TransitionEvent",
    "SamplePath",
    "CtmcSpec",
    "poach_events",
    "adjacency_events",
    "frequency_events",
    "frequency_total_rate",
    "frequency_total_rate_product_form",
    "moran_total_rate",
    "moran_events",
    "simulate",
    "poach_spec",
    "adjacency_spec",
    "frequency_spec",
    "moran_spec",
]


@dataclass(frozen=True)
class TransitionEvent:
    """One generator summand: a rate and a pure state update."""

    rate: float
    kind: str
    indices: tuple
    _apply: callable = field(repr=False)

    def apply(self, state, rng=None):
        return self._apply(state, rng)


@dataclass
class SamplePath:
    """Jump times and visited states of one simulated trajectory."""

    jump_times: list
    states: list
    t_end: float
    seed: object

    def state_at(self, t: float):
        """State at time t (càdlàg: jumps take effect at their own time)."""
        if t < 0 or t > self.t_end:
            raise ValueError(f"time {t} outside [0, {self.t_end}]")
        return self.states[bisect.bisect_right(self.jump_times, t)]

    def occupation(self, key, t_from: float = 0.0, t_to: float | None = None) -> dict:
        """Total time spent per state key over [t_from, t_to]."""
        t_to = self.t_end if t_to is None else t_to
        out: dict = {}
        times = [0.0] + list(self.jump_times) + [self.t_end]
        for i, state in enumerate(self.states):
            lo, hi = max(times[i], t_from), min(times[i + 1], t_to)
            if hi > lo:
                k = key(state)
                out[k] = out.get(k, 0.0) + (hi - lo)
        return out


@dataclass(frozen=True)
class CtmcSpec:
    """A chain given by a canonical state key plus either an exhaustive event
    enumerator or a direct (event, total-rate) sampler."""

    state_key: callable
    events: callable = None
    sample_event: callable = None  # (state, rng) -> (TransitionEvent, total_rate)

    def __post_init__(self):
        if self.events is None and self.sample_event is None:
            raise ValueError("spec needs an enumerator or a sampler")


# ---------------------------------------------------------------------------
# Event enumerators
# ---------------------------------------------------------------------------

def poach_events(g: LabeledGraph, p: ModelParams) -> list:
    """Rate-1 poach per ordered vertex pair plus rate-mu self-employment per
    vertex; total rate N(N-1) + mu N (no-op events included)."""
    events = []
    for v1 in range(1, g.n + 1):
        for v2 in range(1, g.n + 1):
            if v1 != v2:
                events.append(
                    TransitionEvent(
                        1.0, "poach", (v1, v2),
                        lambda s, _r, a=v1, b=v2: poach(s, a, b),
                    )
                )
    if p.mu > 0:
        for v in range(1, g.n + 1):
            events.append(
                TransitionEvent(p.mu, "isolate", (v,), lambda s, _r, a=v: isolate(s, a))
            )
    return events


def adjacency_events(a: AdjacencyMatrix, p: ModelParams) -> list:
    """Rate-1 duplication per ordered index pair plus rate-mu grounding per
    index; mirrors the poaching enumerator on adjacency matrices."""
    events = []
    for i in a.index_set:
        for j in a.index_set:
            if i != j:
                events.append(
                    TransitionEvent(
                        1.0, "duplicate", (i, j),
                        lambda s, _r, x=i, y=j: duplicate(s, x, y),
                    )
                )
    if p.mu > 0:
        for i in a.index_set:
            events.append(
                TransitionEvent(p.mu, "ground", (i,), lambda s, _r, x=i: ground(s, x))
            )
    return events


def _spectrum_move(nu: FrequencySpectrum, *deltas) -> FrequencySpectrum:
    """Apply (size, +-1) increments to a spectrum, accumulating repeats."""
    counts = nu.as_dict()
    for (k, d) in deltas:
        if k < 1:
            continue  # a size-0 remnant leaves the measure
        counts[k] = counts.get(k, 0) + d
        if counts[k] < 0:
            raise ValueError(f"spectrum move below zero at size {k}")
    return FrequencySpectrum.from_dict(counts, nu.total)


def frequency_events(nu: FrequencySpectrum, p: ModelParams) -> list:
    """State-changing transitions of the component-size spectrum.

    Merges: ordered size pair (k1, k2), one k2-component loses a member to a
    k1-component, at rate k1 nu(k1) k2 (nu(k2) - 1{k1=k2}); the k2 = k1 + 1
    case leaves the spectrum unchanged and is skipped.  The lost member of a
    singleton (k2 = 1) leaves no remnant.  Splits (mutation): rate mu k nu(k)
    for k >= 2.
    """
    events = []
    d = nu.as_dict()
    sizes = sorted(d)
    for k1 in sizes:
        for k2 in sizes:
            if k2 == k1 + 1:
                continue  # spectrum no-op
            rate = k1 * d[k1] * k2 * (d[k2] - (1 if k1 == k2 else 0))
            if rate <= 0:
                continue
            target = _spectrum_move(
                nu, (k1, -1), (k2, -1), (k1 + 1, +1), (k2 - 1, +1)
            )
            events.append(
                TransitionEvent(
                    float(rate), "merge", (k1, k2), lambda s, _r, t=target: t
                )
            )
    if p.mu > 0:
        for k in sizes:
            if k >= 2:
                target = _spectrum_move(nu, (k, -1), (k - 1, +1), (1, +1))
                events.append(
                    TransitionEvent(
                        p.mu * k * d[k], "split", (k,), lambda s, _r, t=target: t
                    )
                )
    return events


def frequency_total_rate(nu: FrequencySpectrum, mu: float) -> float:
    """Closed form for the total state-changing rate out of a spectrum.

    Derived directly from the pair dynamics: all N(N-1) ordered resampling
    pairs except same-component pairs (sum k(k-1) nu(k)) and pairs whose
    source component is exactly one smaller than the target component
    (sum k(k+1) nu(k) nu(k+1), a spectrum no-op), plus mu (N - nu(1)) for
    spectrum-changing mutations.
    """
    n = nu.total
    d = nu.as_dict()
    total = n * (n - 1) + mu * (n - d.get(1, 0))
    for k, m in d.items():
        total -= k * (k - 1) * m
        total -= k * (k + 1) * m * d.get(k + 1, 0)
    return float(total)


def frequency_total_rate_product_form(nu: FrequencySpectrum, mu: float) -> float:
    """The compact closed form mu (N - nu(1)) + N^2 1{nu(N)=0} - nu(1)(nu(1)-1).

    Kept for comparison reports: it disagrees with the enumerated total rate
    (for example on the all-singletons spectrum); see frequency_total_rate for
    the form the enumeration actually satisfies.
    """
    n = nu.total
    nu1 = nu.get(1)
    return mu * (n - nu1) + (n * n if nu.get(n) == 0 else 0) - nu1 * (nu1 - 1)


# ---------------------------------------------------------------------------
# Moran model (sampled events; the state space is continuous)
# ---------------------------------------------------------------------------

def moran_total_rate(x: TypeVector, p: ModelParams) -> float:
    return x.n * (x.n - 1) + p.mu * x.n


def moran_events(x: TypeVector, p: ModelParams, rng) -> TransitionEvent:
    """Sample the next Moran event: a rate-1 ordered-pair replacement (j takes
    i's type) or a rate-mu mutation with a fresh uniform type drawn lazily."""
    n = x.n
    total = moran_total_rate(x, p)
    if rng.random() * total < n * (n - 1):
        i = int(rng.integers(0, n))
        j = int(rng.integers(0, n - 1))
        if j >= i:
            j += 1

        def apply_resample(s, _r, a=i, b=j):
            vals = list(s.values)
            vals[b] = vals[a]
            return TypeVector(tuple(vals))

        return TransitionEvent(1.0, "resample", (i + 1, j + 1), apply_resample)
    i = int(rng.integers(0, n))

    def apply_mutation(s, r, a=i):
        vals = list(s.values)
        vals[a] = float(r.random())
        return TypeVector(tuple(vals))

    return TransitionEvent(p.mu, "mutate", (i + 1,), apply_mutation)


# ---------------------------------------------------------------------------
# Chain specs and the simulation engine
# ---------------------------------------------------------------------------

def poach_spec(p: ModelParams) -> CtmcSpec:
    return CtmcSpec(state_key=lambda g: g.key(), events=lambda g: poach_events(g, p))


def adjacency_spec(p: ModelParams) -> CtmcSpec:
    return CtmcSpec(state_key=lambda a: a.key(), events=lambda a: adjacency_events(a, p))


def frequency_spec(p: ModelParams) -> CtmcSpec:
    return CtmcSpec(
        state_key=lambda nu: nu.key(), events=lambda nu: frequency_events(nu, p)
    )


def moran_spec(p: ModelParams) -> CtmcSpec:
    def sample(x, rng):
        return moran_events(x, p, rng), moran_total_rate(x, p)

    return CtmcSpec(state_key=lambda x: x.values, sample_event=sample)


def simulate(spec: CtmcSpec, init, t_end: float, seed) -> SamplePath:
    """Exact Gillespie path: exponential holding times at the state's total
    rate, next event chosen proportionally to rate.  Bit-reproducible from the
    seed; zero-total-rate states hold forever."""
    if t_end < 0:
        raise ValueError("t_end must be >= 0")
    rng = seed if isinstance(seed, np.random.Generator) else stream(int(seed), 0)
    state = init
    key = spec.state_key(state)
    times: list = []
    states = [state]
    t = 0.0
    while True:
        if spec.events is not None:
            events = spec.events(state)
            total = sum(ev.rate for ev in events)
            if total <= 0.0:
                break
            t += rng.exponential(1.0 / total)
            if t >= t_end:
                break
            u = rng.random() * total
            acc = 0.0
            chosen = events[-1]
            for ev in events:
                acc += ev.rate
                if u < acc:
                    chosen = ev
                    break
        else:
            chosen, total = spec.sample_event(state, rng)
            if total <= 0.0:
                break
            t += rng.exponential(1.0 / total)
            if t >= t_end:
                break
        new = chosen.apply(state, rng)
        new_key = spec.state_key(new)
        if new_key != key:
            times.append(t)
            states.append(new)
            state, key = new, new_key
    return SamplePath(times, states, t_end, seed)
