"""Deterministic random-stream derivation.

Every driver that loops over samples or steps derives one child stream per
(step, role) key from a root ``SeedSequence``. Draws for a given key never
depend on how much randomness other keys consumed, so per-sample work can be
reordered or parallelized without changing results, and a stored intermediate
state can be replayed by re-deriving the same keys.
"""

from __future__ import annotations

from typing import Union

import numpy as np

SeedLike = Union[int, np.random.SeedSequence, None]


def root_sequence(seed: SeedLike) -> np.random.SeedSequence:
    """Normalize a user-facing seed into a SeedSequence root."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if seed is None:
        return np.random.SeedSequence()
    return np.random.SeedSequence(int(seed))


def child_sequence(root: np.random.SeedSequence, *key: int) -> np.random.SeedSequence:
    """Child SeedSequence addressed by an integer key path (counter-derived)."""
    spawn_key = tuple(root.spawn_key) + tuple(int(k) for k in key)
    return np.random.SeedSequence(entropy=root.entropy, spawn_key=spawn_key)


def substream(root: np.random.SeedSequence, *key: int) -> np.random.Generator:
    """Generator for the child stream addressed by ``key``."""
    return np.random.default_rng(child_sequence(root, *key))
