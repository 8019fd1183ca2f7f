"""Integer-partition enumeration and counting helpers.

A component-size spectrum on total N is exactly an integer partition of N
written multiplicity-style, so the state space of the frequency chain is
enumerated here, together with the number of labelled clique-component
graphs realizing a given spectrum.
"""

from __future__ import annotations

import math

from .graphs import FrequencySpectrum

__all__ = ["spectra", "labeled_graph_count", "set_partitions"]


def _partitions_desc(n: int, max_part: int):
    """Yield partitions of n as non-increasing tuples with parts <= max_part."""
    if n == 0:
        yield ()
        return
    for first in range(min(n, max_part), 0, -1):
        for rest in _partitions_desc(n - first, first):
            yield (first,) + rest


def spectra(n: int) -> list:
    """All frequency spectra with total n, in a fixed deterministic order."""
    out = []
    for parts in _partitions_desc(n, n):
        counts: dict = {}
        for p in parts:
            counts[p] = counts.get(p, 0) + 1
        out.append(FrequencySpectrum.from_dict(counts, n))
    return out


def labeled_graph_count(nu: FrequencySpectrum) -> int:
    """Number of labelled clique-component graphs with spectrum nu.

    Equals N! / prod_l (l!)^{nu(l)} nu(l)!  (exact integer arithmetic).
    """
    num = math.factorial(nu.total)
    den = 1
    for (size, mult) in nu.counts:
        den *= math.factorial(size) ** mult * math.factorial(mult)
    q, r = divmod(num, den)
    if r:
        raise ArithmeticError(f"non-integer class count for {nu.counts}")
    return q


def set_partitions(items: list) -> list:
    """All partitions of a list into non-empty blocks (exponential; small n)."""
    if not items:
        return [[]]
    first, rest = items[0], items[1:]
    out = []
    for part in set_partitions(rest):
        # first joins an existing block or opens its own
        for i in range(len(part)):
            out.append(part[:i] + [[first] + part[i]] + part[i + 1:])
        out.append([[first]] + part)
    return out
