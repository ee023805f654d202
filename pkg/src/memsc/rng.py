"""Named, reproducible generator streams derived from one master seed."""
from __future__ import annotations

import zlib

import numpy as np


def _key(k) -> int:
    if isinstance(k, (int, np.integer)):
        if k < 0:
            raise ValueError("stream keys must be non-negative")
        return int(k)
    return zlib.crc32(str(k).encode())


def seed_for(master_seed: int, *keys) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(master_seed), spawn_key=tuple(_key(k) for k in keys))


def derive_rng(master_seed: int, *keys) -> np.random.Generator:
    """Independent generator for the stream named by ``keys``.

    The same (seed, keys) always yields the same stream, regardless of what
    other streams were drawn before it.
    """
    return np.random.default_rng(seed_for(master_seed, *keys))


def derive_int(master_seed: int, *keys) -> int:
    return int(seed_for(master_seed, *keys).generate_state(1, np.uint32)[0])
