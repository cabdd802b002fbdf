"""Seeded random number generation.

All randomness in the package flows through explicit integer seeds and the
counter-based Philox bit generator, so results are reproducible and
independent of scheduling. Replicate seeds are derived from a master seed by
replicate index, never from global state.
"""
from __future__ import annotations

import numpy as np


def generator(seed: int) -> np.random.Generator:
    """Self-contained generator for one seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def child_seeds(master_seed: int, count: int) -> list[int]:
    """Derive `count` independent integer seeds from a master seed by index."""
    return [
        int(np.random.SeedSequence(int(master_seed), spawn_key=(i,)).generate_state(1, np.uint64)[0])
        for i in range(count)
    ]
