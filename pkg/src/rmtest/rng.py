"""Seeded, splittable random streams (numpy SeedSequence underneath)."""

from __future__ import annotations

import numpy as np

RandomStream = np.random.Generator


def stream(seed) -> RandomStream:
    """A generator from an int seed, a SeedSequence, or an existing generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def split(seed, count: int) -> list[np.random.SeedSequence]:
    """Independent child seed sequences; child i depends only on (seed, i)."""
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    elif isinstance(seed, np.random.Generator):
        ss = np.random.SeedSequence(int(seed.integers(2**63)))
    else:
        ss = np.random.SeedSequence(seed)
    return ss.spawn(count)


def child(seed, index: int, tag: int = 0) -> RandomStream:
    """Deterministic child stream keyed by (seed, tag, index)."""
    if isinstance(seed, np.random.Generator):
        raise TypeError("child() needs an integer seed for reproducible keying")
    return stream(np.random.SeedSequence([int(seed), int(tag), int(index)]))
