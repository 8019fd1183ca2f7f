"""Exact finite-state oracles: generator matrices, stationary distributions,
transition semigroups, and verification of the stationary formulas.

Everything here is dense linear algebra on enumerated state spaces, built to
adjudicate what the simulators and closed-form laws must reproduce.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph

from .chains import CtmcSpec, frequency_events, poach_spec
from .equilibrium import graph_pmf_corrected, graph_pmf_product_rule, med_pmf
from .graphs import FrequencySpectrum, LabeledGraph, ModelParams
from .partitions import set_partitions, spectra

__all__ = [
    "RateMatrix",
    "DistributionVector",
    "ReducibleChainError",
    "StateSpaceCapError",
    "build_rate_matrix",
    "stationary_distribution",
    "transition_semigroup",
    "verify_med_balance",
    "graph_stationary_check",
    "GraphStationaryRow",
    "complete_component_graphs",
]


class StateSpaceCapError(RuntimeError):
    """Raised when reachability closure exceeds the configured state cap."""


class ReducibleChainError(RuntimeError):
    """Raised when a stationary solve is attempted on a reducible chain."""

    def __init__(self, classes):
        self.classes = classes
        super().__init__(
            f"chain is reducible: {len(classes)} strongly connected classes; "
            f"sizes {[len(c) for c in classes]}"
        )


@dataclass(frozen=True)
class RateMatrix:
    """Generator on an ordered list of canonical state keys."""

    states: tuple  # state keys, fixed order
    objects: tuple  # the states themselves, same order
    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.shape != (len(self.states), len(self.states)):
            raise ValueError("rate matrix shape does not match state count")
        off = q - np.diag(np.diag(q))
        if off.min() < 0:
            raise ValueError("negative off-diagonal rate")
        if np.abs(q.sum(axis=1)).max() > 1e-12 * max(1.0, np.abs(q).max()):
            raise ValueError("rows must sum to zero")
        object.__setattr__(self, "q", q)

    def index(self, key) -> int:
        return self.states.index(key)


@dataclass(frozen=True)
class DistributionVector:
    """Probability vector over the same ordered state keys."""

    states: tuple
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.min() < -1e-12:
            raise ValueError("negative probability")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {p.sum()}")
        object.__setattr__(self, "probabilities", p)

    def __getitem__(self, key) -> float:
        return float(self.probabilities[self.states.index(key)])


def build_rate_matrix(spec: CtmcSpec, seeds, cap: int = 200_000) -> RateMatrix:
    """Materialize the generator on the reachability closure of the seeds.

    Entry (s, s') sums the rates of all events from s landing in s'; the
    diagonal makes rows sum to zero.  No-op events never contribute.
    """
    if spec.events is None:
        raise ValueError("rate matrix needs an enumerable chain")
    by_key: dict = {}
    frontier = []
    for s in seeds:
        k = spec.state_key(s)
        if k not in by_key:
            by_key[k] = s
            frontier.append(s)
    edges: dict = {}
    while frontier:
        state = frontier.pop()
        k = spec.state_key(state)
        row = edges.setdefault(k, {})
        for ev in spec.events(state):
            new = ev.apply(state, None)
            nk = spec.state_key(new)
            if nk == k:
                continue
            row[nk] = row.get(nk, 0.0) + ev.rate
            if nk not in by_key:
                if len(by_key) >= cap:
                    raise StateSpaceCapError(
                        f"reachable state space exceeds cap {cap} "
                        f"(frontier size {len(frontier) + 1})"
                    )
                by_key[nk] = new
                frontier.append(new)
    keys = tuple(sorted(by_key))
    pos = {k: i for i, k in enumerate(keys)}
    q = np.zeros((len(keys), len(keys)))
    for k, row in edges.items():
        for nk, rate in row.items():
            q[pos[k], pos[nk]] = rate
    np.fill_diagonal(q, -q.sum(axis=1))
    return RateMatrix(keys, tuple(by_key[k] for k in keys), q)


def _strong_classes(q: np.ndarray) -> list:
    adj = sp.csr_matrix((q - np.diag(np.diag(q))) > 0)
    n_comp, labels = csgraph.connected_components(adj, directed=True, connection="strong")
    classes = [[] for _ in range(n_comp)]
    for i, lab in enumerate(labels):
        classes[lab].append(i)
    return classes


def stationary_distribution(q: RateMatrix, residual_tol: float = 1e-10) -> DistributionVector:
    """Unique pi with pi Q = 0, sum pi = 1, by a dense solve with one row of
    the transposed generator replaced by the normalization constraint.
    Requires the positive-rate digraph to be strongly connected."""
    classes = _strong_classes(q.q)
    if len(classes) > 1:
        recurrent = []
        for cls in classes:
            outside = [j for j in range(len(q.states)) if j not in set(cls)]
            if not outside or np.all(q.q[np.ix_(cls, outside)] == 0):
                recurrent.append([q.states[i] for i in cls])
        raise ReducibleChainError(recurrent)
    a = q.q.T.copy()
    a[-1, :] = 1.0
    b = np.zeros(len(q.states))
    b[-1] = 1.0
    pi = np.linalg.solve(a, b)
    residual = np.abs(pi @ q.q).max()
    if residual > residual_tol:
        raise RuntimeError(f"stationary solve residual {residual} > {residual_tol}")
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    return DistributionVector(q.states, pi)


def transition_semigroup(q: RateMatrix, t: float, tail: float = 1e-13) -> np.ndarray:
    """exp(tQ) by uniformization: Poisson-weighted powers of the uniformized
    kernel, truncated once the accumulated Poisson mass exceeds 1 - tail."""
    if t < 0:
        raise ValueError("t must be >= 0")
    n = len(q.states)
    lam = 1.01 * max(-q.q.diagonal().min(), 0.0)
    if t == 0.0 or lam == 0.0:
        return np.eye(n)
    kernel = np.eye(n) + q.q / lam
    lt = lam * t
    weight = np.exp(-lt)
    acc = weight * np.eye(n)
    power = np.eye(n)
    cum = weight
    m = 0
    while cum < 1.0 - tail:
        m += 1
        power = power @ kernel
        weight *= lt / m
        acc += weight * power
        cum += weight
        if m > 100_000:
            raise RuntimeError("uniformization failed to converge")
    return acc


# ---------------------------------------------------------------------------
# Stationarity verifications
# ---------------------------------------------------------------------------

def verify_med_balance(n: int, mu: float) -> float:
    """Global balance of the Ewens pmf under the frequency-chain rates.

    For every spectrum nu checks sum_nu' pi(nu') q(nu', nu) = pi(nu) q_out(nu)
    and returns the maximum relative residual.
    """
    if n > 40:
        raise ValueError("balance check capped at n <= 40")
    params = ModelParams(mu=mu, n=n)
    states = spectra(n)
    pi = {nu.key(): med_pmf(nu, mu) for nu in states}
    inflow = {nu.key(): 0.0 for nu in states}
    outrate = {nu.key(): 0.0 for nu in states}
    for nu in states:
        for ev in frequency_events(nu, params):
            target = ev.apply(nu, None)
            inflow[target.key()] += pi[nu.key()] * ev.rate
            outrate[nu.key()] += ev.rate
    worst = 0.0
    for nu in states:
        lhs = inflow[nu.key()]
        rhs = pi[nu.key()] * outrate[nu.key()]
        scale = max(abs(lhs), abs(rhs), 1e-300)
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst


def complete_component_graphs(n: int) -> list:
    """All labelled graphs on 1..n whose components are complete."""
    out = []
    for part in set_partitions(list(range(1, n + 1))):
        edges = []
        for block in part:
            edges.extend(itertools.combinations(sorted(block), 2))
        out.append(LabeledGraph(n, frozenset(edges)))
    out.sort(key=lambda g: g.key())
    return out


@dataclass(frozen=True)
class GraphStationaryRow:
    state_key: tuple
    spectrum: tuple
    exact_pi: float
    pi_product_rule: float
    pi_corrected: float
    abs_diff_product_rule: float
    abs_diff_corrected: float


def graph_stationary_check(n: int, mu: float) -> list:
    """Exact stationary law of the poaching chain on clique-component graphs,
    compared per state against the plain product law and against the
    class-size-corrected Ewens law."""
    if n > 5:
        raise ValueError("graph stationary check capped at n <= 5")
    from .graphs import spectrum_of_graph

    spec = poach_spec(ModelParams(mu=mu, n=n))
    rm = build_rate_matrix(spec, complete_component_graphs(n))
    pi = stationary_distribution(rm)
    rows = []
    for key, g in zip(rm.states, rm.objects):
        nu = spectrum_of_graph(g)
        exact = pi[key]
        plain = graph_pmf_product_rule(nu, mu)
        corrected = graph_pmf_corrected(nu, mu)
        rows.append(
            GraphStationaryRow(
                state_key=key,
                spectrum=nu.key(),
                exact_pi=exact,
                pi_product_rule=plain,
                pi_corrected=corrected,
                abs_diff_product_rule=abs(exact - plain),
                abs_diff_corrected=abs(exact - corrected),
            )
        )
    return rows
