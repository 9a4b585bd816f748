"""Deterministic random-stream derivation.

Every stochastic routine takes an explicit ``numpy.random.Generator``.
Parallel loops derive one independent child stream per work item from
``(seed, *key)`` so results do not depend on scheduling or worker count.
"""

import numpy as np


def derive_rng(seed, *key):
    """Return a Generator seeded deterministically from ``seed`` and ``key``.

    ``derive_rng(seed, b)`` yields the same stream no matter which worker
    processes item ``b`` or in what order items run.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


def derive_seed(seed, *key):
    """Deterministic integer sub-seed for namespacing nested seeded loops."""
    return int(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)).generate_state(1)[0])
