"""Deterministic random-stream derivation.

Every stochastic routine in the package draws from a counter-based Philox
generator seeded through ``numpy.random.SeedSequence``.  A stream is
identified by a master seed plus a path of small integers, so any iteration
of any loop can be reproduced in isolation::

    rng = stream(seed, NS_TRIAL, k)   # generator for trial k, any thread

Streams derived from distinct paths are statistically independent, and the
mapping (seed, path) -> stream never depends on thread count or execution
order.
"""

from __future__ import annotations

import numpy as np

# Namespace constants for the first path component.  Keeping them distinct
# guarantees that e.g. trial 3 of a power study and calibration draw 3 of a
# reference model never share a stream.
NS_SAMPLE = 0
NS_MODEL_MEAN = 1
NS_MODEL_CAL = 2
NS_TRIAL = 3
NS_PERMUTE = 4
NS_KS_REF = 5
NS_KS_CAL = 6
NS_EXP_MODEL = 7
NS_EXP_CELL = 8


def stream(seed: int, *path: int) -> np.random.Generator:
    """Return the Philox generator for ``(seed, path)``.

    Parameters
    ----------
    seed : master seed, any Python integer.
    path : zero or more non-negative integers naming the sub-stream.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *path: int) -> int:
    """Deterministic integer child seed for APIs that take a plain seed.

    The child is the first 63-bit word of the ``(seed, path)`` seed
    sequence, so it inherits the independence guarantees of :func:`stream`
    while remaining an ordinary non-negative Python int.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))
