"""Deterministic random-stream fan-out.

Every stochastic operation derives its generators from a single master seed
through ``substream(seed, domain, *key)``. The key is a tuple of small
integers, so two call sites never collide and adding more replicas, chunks or
trials never perturbs streams that already existed. Results are therefore
bit-reproducible for a fixed seed regardless of evaluation order or worker
count.
"""

from __future__ import annotations

import numpy as np

# Domain tags for the spawn key. One per independent consumer of randomness.
D_TREE = 1        # standalone tree realizations
D_WALK_TREE = 2   # per-replica tree growth during walk simulation
D_WALK = 3        # per-replica walk steps
D_POOL = 4        # per-chunk tree-method sample pools
D_POOL_POP = 5    # population-method pool iteration
D_TUPLE = 6       # tuple assembly for the speed formula
D_HIT = 7         # hitting-probability trials


def substream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the stream identified by (seed, key)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))
