"""Receiver-memory corruption, SimHash cues and the cue-verified ID lookup."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

import numpy as np

from .errors import ConfigError, LengthMismatch
from .memory import MemoryStore, softmax_weights
from .rng import derive_rng

MODES = ("none", "id_desync", "vec_perturb")


@dataclass(frozen=True)
class CorruptionConfig:
    """Corruption mode and cue parameters.

    ``level`` is the permuted fraction ``p`` for ``id_desync`` and the noise
    standard deviation for ``vec_perturb``.
    """

    mode: str = "none"
    level: float = 0.0
    cue_bits: int = 32
    cue_tolerance: Optional[int] = None
    cue_seed: int = 0
    fallback_beta: float = 1.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError("corruption.mode", f"must be one of {MODES}, got {self.mode!r}")
        if self.mode == "id_desync" and not 0.0 <= self.level <= 1.0:
            raise ConfigError("corruption.level", "p must lie in [0, 1]")
        if self.level < 0:
            raise ConfigError("corruption.level", "must be non-negative")
        if self.cue_bits < 1:
            raise ConfigError("corruption.cue_bits", "must be positive")
        if not 0 <= self.tolerance < self.cue_bits:
            raise ConfigError("corruption.cue_tolerance", "must satisfy 0 <= T_cue < B_cue")
        if not self.fallback_beta > 0:
            raise ConfigError("corruption.fallback_beta", "must be positive")

    @property
    def tolerance(self) -> int:
        if self.cue_tolerance is None:
            return int(math.floor(0.25 * self.cue_bits))
        return self.cue_tolerance


@lru_cache(maxsize=64)
def _hyperplanes(cue_bits: int, d: int, cue_seed: int) -> np.ndarray:
    h = derive_rng(cue_seed, "simhash", d, cue_bits).standard_normal((cue_bits, d))
    h /= np.linalg.norm(h, axis=1, keepdims=True)
    h.setflags(write=False)
    return h


class CueHasher:
    """SimHash over fixed random hyperplanes shared by both ends."""

    def __init__(self, d: int, cue_bits: int = 32, cue_seed: int = 0):
        self.d = d
        self.cue_bits = cue_bits
        self.cue_seed = cue_seed
        self.normals = _hyperplanes(cue_bits, d, cue_seed)

    def __call__(self, z) -> np.ndarray:
        return self.normals @ np.asarray(z, dtype=np.float64) >= 0.0


def simhash_cue(z, cue_bits: int = 32, cue_seed: int = 0) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    return CueHasher(z.shape[0], cue_bits, cue_seed)(z)


def hamming(a, b) -> int:
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise LengthMismatch(f"cue lengths differ: {a.size} vs {b.size}")
    return int(np.count_nonzero(a != b))


def verify_cue(received, stored, tolerance: int) -> bool:
    return hamming(received, stored) <= tolerance


def apply_id_desync(store: MemoryStore, p: float, rng: np.random.Generator) -> MemoryStore:
    """Permute the index-to-slot map for ``ceil(p*M)`` random indices.

    Every selected index moves when two or more are selected; prototypes and
    cues are untouched.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    out = store.copy()
    m = out.size
    k = min(m, math.ceil(p * m))
    if k < 2:
        return out
    chosen = np.sort(rng.choice(m, size=k, replace=False))
    while True:
        perm = rng.permutation(k)
        if not np.any(perm == np.arange(k)):
            break
    ids = out._ids
    ids[chosen] = ids[chosen[perm]]
    return out


def apply_vec_perturb(store: MemoryStore, sigma: float, rng: np.random.Generator) -> MemoryStore:
    """Add N(0, sigma^2 I) to every prototype, renormalize, refresh cues."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    out = store.copy()
    if sigma == 0 or out.size == 0:
        return out
    protos = out.prototypes + rng.normal(0.0, sigma, size=out.prototypes.shape)
    protos /= np.linalg.norm(protos, axis=1, keepdims=True)
    out._protos[: out.size] = protos
    out.recompute_cues()
    return out


def corrupt(store: MemoryStore, config: CorruptionConfig, rng: np.random.Generator) -> MemoryStore:
    if config.mode == "id_desync":
        return apply_id_desync(store, config.level, rng)
    if config.mode == "vec_perturb":
        return apply_vec_perturb(store, config.level, rng)
    return store.copy()


@dataclass(frozen=True)
class RefreshRequest:
    """Receiver could not resolve an ID; the slot it implicates is repaired."""

    slot: int


def rx_resolve_id(index: int, cue, rx: MemoryStore, method: str,
                  tolerance: int, fallback_beta: float = 1.0) -> Union[int, RefreshRequest]:
    """Resolve a received ID to a receiver slot, or ask for a refresh.

    1. Look the slot up through the id map and accept if its cue verifies.
    2. Otherwise search by cue in Hamming space: the closest cue (VQ) or the
       slot nearest to a Hamming-softmax blend of prototypes (Hopfield), and
       accept if that slot's cue verifies.
    3. Otherwise request a refresh of the id-mapped slot.
    """
    slot = rx.slot_of(index)
    if verify_cue(cue, rx.cues[slot], tolerance):
        return slot
    dist = np.array([hamming(cue, c) for c in rx.cues], dtype=np.float64)
    if method == "vq":
        cand = int(np.argmin(dist))
    else:
        w = softmax_weights(-dist, fallback_beta)
        blend = w @ rx.prototypes
        cand = int(np.argmax(rx.prototypes @ blend))
    if dist[cand] <= tolerance:
        return cand
    return RefreshRequest(slot)
