"""Seeded random-number streams and Latin hypercube initialization.

Reproducibility contract: every optimization run owns a single 64-bit
seed. The seed is split into independent child streams with
``numpy.random.SeedSequence.spawn``, one per consumer, in this fixed
order:

    0. ``init``       initial design (and random-search draws)
    1. ``proposals``  trust-region and latent-ball candidate draws
    2. ``flow``       direction candidates inside the flow fit
    3. ``ts``         Thompson-sampling posterior draws
    4. ``nn``         neural-network weight initialization

Two runs with the same seed therefore consume identical streams and
produce identical traces.
"""

from __future__ import annotations

import numpy as np

STREAM_NAMES = ("init", "proposals", "flow", "ts", "nn")


def rng_streams(seed: int) -> dict[str, np.random.Generator]:
    """Split ``seed`` into one independent generator per consumer."""
    children = np.random.SeedSequence(int(seed)).spawn(len(STREAM_NAMES))
    return {
        name: np.random.default_rng(child)
        for name, child in zip(STREAM_NAMES, children)
    }


def as_generator(random_state) -> np.random.Generator:
    """Coerce None, an int seed, or a Generator into a Generator."""
    if random_state is None:
        return np.random.default_rng()
    if isinstance(random_state, np.random.Generator):
        return random_state
    return np.random.default_rng(random_state)


def latin_hypercube(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Plain random Latin hypercube design in [0, 1]^dim.

    Each column places exactly one point in each of the n strata
    [k/n, (k+1)/n), uniformly within the stratum.
    """
    if n < 1:
        raise ValueError(f"need at least one sample, got n={n}")
    if dim < 1:
        raise ValueError(f"need at least one dimension, got dim={dim}")
    strata = np.empty((n, dim))
    for j in range(dim):
        strata[:, j] = rng.permutation(n)
    jitter = rng.random((n, dim))
    return (strata + jitter) / n
