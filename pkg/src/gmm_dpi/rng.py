"""Reproducible random substreams.

Every stochastic quantity in an experiment is drawn from a generator keyed by
``(seed, *path)``, e.g. ``(seed, grid_index, TRIAL, trial_index)``.  The key
fully determines the stream, so the order in which workers execute trials
cannot change any result.
"""

import numpy as np

# second component of the key path; separates the roles of one grid point
MEAN_VECTOR = 0
UNLABELED = 1
TRIAL = 2


def substream(seed: int, *path: int) -> np.random.Generator:
    """Independent PCG64 generator for the key ``(seed, *path)``."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator, an int seed or None."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
