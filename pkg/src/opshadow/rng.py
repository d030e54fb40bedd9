"""Named, order-independent random streams derived from one master seed."""
from __future__ import annotations

import zlib

import numpy as np

SEED_MASK = (1 << 64) - 1


def _key(part) -> int:
    if isinstance(part, (int, np.integer)) and not isinstance(part, bool):
        if part < 0:
            raise ValueError(f"stream key {part} must be non-negative")
        return int(part)
    return zlib.crc32(str(part).encode()) | (1 << 32)


def seed_sequence(seed: int, *path) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed) & SEED_MASK, spawn_key=tuple(_key(p) for p in path))


def stream(seed: int, *path) -> np.random.Generator:
    """Generator for ``seed`` and a path of names/ints, e.g. ``stream(7, "l1", 1000, 3)``."""
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *path)))


def derive_seed(seed: int, *path) -> int:
    """A 64-bit child seed, for handing a derived stream to code that takes a seed."""
    return int(seed_sequence(seed, *path).generate_state(1, np.uint64)[0])
