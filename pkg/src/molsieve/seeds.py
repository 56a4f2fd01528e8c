"""Deterministic seed splitting.

All randomness in a campaign flows from one top-level integer seed. Each
component draws from its own stream, derived with ``numpy.random.SeedSequence``
using a fixed ``spawn_key``:

    SeedSequence(entropy=seed, spawn_key=(component, *indices))

The component codes below are part of the reproducibility contract and must
never be renumbered. Per-iteration streams append the iteration index, so a
resumed campaign regenerates exactly the randomness of an uninterrupted one.
"""

from __future__ import annotations

import numpy as np

INIT_BATCH = 0
SURROGATE_FIT = 1
ACQUISITION = 2
DIVERSITY = 3

_UINT32_MAX = 2**32 - 1


def substream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the component stream identified by `key`."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.PCG64(ss))


def subseed(seed: int, *key: int) -> int:
    """Integer seed (fits uint32, accepted by sklearn and torch) for `key`."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    return int(ss.generate_state(1, np.uint32)[0]) & _UINT32_MAX
