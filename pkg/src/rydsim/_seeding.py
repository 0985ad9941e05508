"""Deterministic RNG derivation for parallel ensembles.

Every stochastic task derives its generator from (master_seed, *indices)
through ``numpy.random.SeedSequence``, so results are bit-identical no
matter how tasks are distributed over workers.
"""

from __future__ import annotations

import numpy as np


def rng_for(master_seed: int, *indices: int) -> np.random.Generator:
    """Generator for one task, keyed by master seed plus task indices."""
    ss = np.random.SeedSequence([int(master_seed)] + [int(i) for i in indices])
    return np.random.default_rng(ss)


def seed_for(master_seed: int, *indices: int) -> int:
    """Stable 63-bit integer seed derived the same way as rng_for."""
    ss = np.random.SeedSequence([int(master_seed)] + [int(i) for i in indices])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)
