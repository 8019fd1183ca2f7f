"""Time-reversal duality for the duplication/grounding chain.

The reversed chain has the transposed off-diagonal rates.  Pairing it with
the indicator duality function forces the potential to be the difference of
total backward and forward rates at each state, equivalently

    beta(A) = 2^(N-1) (F + mu Z) - (N(N-1) + mu N),

where F counts ordered pairs fixing A under duplication and Z counts zero
columns: every fixing event has 2^(N-1) preimages (the erased column is
free).  With this potential the exponentially weighted backward expectation
reproduces the forward transition probabilities exactly.

The difference of *state-changing* total rates, (N(N-1) - F) + mu (N - Z),
is exposed separately as ``effective_exit_rate``; it is the quantity bounded
by N(N-1+mu) but it does not satisfy the duality identity.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .chains import adjacency_spec
from .exact import RateMatrix, build_rate_matrix, transition_semigroup
from .graphs import AdjacencyMatrix, ModelParams, duplicate
from .rng import stream

__all__ = [
    "adjacency_space",
    "forward_rate_matrix",
    "backward_rates",
    "fixed_pair_count",
    "zero_column_count",
    "potential",
    "effective_exit_rate",
    "fk_exact_check",
    "fk_monte_carlo_check",
    "FkMonteCarloRow",
]


def adjacency_space(n: int) -> list:
    """All adjacency matrices on the full index set [n] (2^C(n,2) states)."""
    if n > 5:
        raise ValueError("full adjacency space enumeration capped at n <= 5")
    idx = tuple(range(1, n + 1))
    pairs = list(itertools.combinations(idx, 2))
    out = []
    for bits in itertools.product((0, 1), repeat=len(pairs)):
        edges = [pairs[i] for i, b in enumerate(bits) if b]
        out.append(AdjacencyMatrix.from_edges(idx, edges))
    return out


def forward_rate_matrix(n: int, mu: float) -> RateMatrix:
    """Generator of the duplication/grounding chain on all of [n]."""
    spec = adjacency_spec(ModelParams(mu=mu, n=n))
    return build_rate_matrix(spec, adjacency_space(n))


def backward_rates(n: int, mu: float) -> RateMatrix:
    """Time-reversed chain: off-diagonal rates transposed, diagonals rebuilt
    so that rows sum to zero."""
    fwd = forward_rate_matrix(n, mu)
    q = fwd.q.T.copy()
    np.fill_diagonal(q, 0.0)
    np.fill_diagonal(q, -q.sum(axis=1))
    return RateMatrix(fwd.states, fwd.objects, q)


def fixed_pair_count(a: AdjacencyMatrix) -> int:
    """Ordered pairs (i, j) whose duplication move fixes the matrix."""
    count = 0
    for i in a.index_set:
        for j in a.index_set:
            if i != j and duplicate(a, i, j).key() == a.key():
                count += 1
    return count


def zero_column_count(a: AdjacencyMatrix) -> int:
    return int(np.sum(~a.entries.any(axis=0)))


def potential(a: AdjacencyMatrix, mu: float) -> float:
    """Duality potential: total backward rate minus total forward rate."""
    n = a.size
    f = fixed_pair_count(a)
    z = zero_column_count(a)
    return 2.0 ** (n - 1) * (f + mu * z) - (n * (n - 1) + mu * n)


def effective_exit_rate(a: AdjacencyMatrix, mu: float) -> float:
    """Total rate of state-changing events out of the matrix; lies in
    [0, N(N-1+mu)]."""
    n = a.size
    return (n * (n - 1) - fixed_pair_count(a)) + mu * (n - zero_column_count(a))


def _potential_vector(rm: RateMatrix, mu: float) -> np.ndarray:
    return np.array([potential(a, mu) for a in rm.objects])


def fk_exact_check(n: int, mu: float, t: float) -> float:
    """Max absolute residual of the duality identity at time t.

    Left side: the forward semigroup entry P_A(M_t = A~) by uniformization.
    Right side: the weighted backward semigroup exp(t(Q_bwd + diag(beta)))
    entry (A~, A), computed independently by a dense matrix exponential.
    """
    if n > 3:
        raise ValueError("exact duality check capped at n <= 3")
    fwd = forward_rate_matrix(n, mu)
    bwd = backward_rates(n, mu)
    lhs = transition_semigroup(fwd, t)
    rhs = scipy.linalg.expm(t * (bwd.q + np.diag(_potential_vector(fwd, mu))))
    return float(np.abs(lhs - rhs.T).max())


@dataclass(frozen=True)
class FkMonteCarloRow:
    a_key: tuple
    atilde_key: tuple
    lhs: float
    rhs_exact: float
    rhs_mc: float
    stderr: float
    z_score: float


def fk_monte_carlo_check(n: int, mu: float, t: float, replicates: int, seed: int) -> list:
    """Monte Carlo check of the duality identity.

    Backward paths are simulated from every start A~; the exponential weight
    of the piecewise-constant potential is accumulated exactly along each
    path (sum of beta * holding time).  One run estimates the whole row
    { P_A(M_t = A~) : A } at once via the weighted terminal indicator.
    """
    if replicates < 1000:
        raise ValueError("need at least 10^3 replicates")
    fwd = forward_rate_matrix(n, mu)
    bwd = backward_rates(n, mu)
    beta = _potential_vector(fwd, mu)
    lhs = transition_semigroup(fwd, t)
    rhs_exact = scipy.linalg.expm(t * (bwd.q + np.diag(beta))).T
    m = len(fwd.states)
    exit_rate = -bwd.q.diagonal()
    # embedded jump kernel of the backward chain
    kernel = bwd.q - np.diag(bwd.q.diagonal())
    with np.errstate(invalid="ignore"):
        kernel = np.where(
            exit_rate[:, None] > 0, kernel / np.maximum(exit_rate, 1e-300)[:, None], 0.0
        )
    cum = np.cumsum(kernel, axis=1)
    rows = []
    for start in range(m):
        sums = np.zeros(m)
        sq_sums = np.zeros(m)
        rng = stream(seed, start)
        for _rep in range(replicates):
            s = start
            t_cur = 0.0
            logw = 0.0
            while True:
                rate = exit_rate[s]
                hold = rng.exponential(1.0 / rate) if rate > 0 else math.inf
                if t_cur + hold >= t:
                    logw += beta[s] * (t - t_cur)
                    break
                logw += beta[s] * hold
                t_cur += hold
                s = min(int(np.searchsorted(cum[s], rng.random())), m - 1)
            w = math.exp(logw)
            sums[s] += w
            sq_sums[s] += w * w
        means = sums / replicates
        variances = np.maximum(sq_sums / replicates - means ** 2, 0.0)
        stderrs = np.sqrt(variances / replicates)
        for a in range(m):
            se = max(stderrs[a], 1e-300)
            rows.append(
                FkMonteCarloRow(
                    a_key=fwd.states[a],
                    atilde_key=fwd.states[start],
                    lhs=float(lhs[a, start]),
                    rhs_exact=float(rhs_exact[a, start]),
                    rhs_mc=float(means[a]),
                    stderr=float(stderrs[a]),
                    z_score=float((means[a] - lhs[a, start]) / se),
                )
            )
    return rows
