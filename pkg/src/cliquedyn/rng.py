"""Seed handling: counter-based (Philox) streams, splittable per replicate.

Every stochastic routine takes an explicit integer seed and derives
independent, platform-stable streams from it, so replicate farms are
reproducible regardless of scheduling order.
"""

from __future__ import annotations

import numpy as np

__all__ = ["stream"]


def stream(seed: int, *ids: int) -> np.random.Generator:
    """Independent generator for the sub-stream identified by ``ids``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(i) for i in ids))
    return np.random.Generator(np.random.Philox(ss))
