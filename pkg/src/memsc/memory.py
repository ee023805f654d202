"""Shared prototype memory with nearest-match and Hopfield retrieval."""
from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from .core_math import normalize
from .errors import DimensionMismatch, EmptyMemory, NonPositiveBeta

CueFn = Callable[[np.ndarray], np.ndarray]


class MemoryStore:
    """Capacity-bounded ordered list of unit-norm prototypes.

    ``id_map[i]`` is the slot an index ``i`` resolves to; it is the identity
    until a corruption model permutes it. When ``cue_fn`` is given, every slot
    also carries a fingerprint of its prototype in ``cues``.
    """

    def __init__(self, d: int, capacity: int, cue_fn: Optional[CueFn] = None):
        if d < 1 or capacity < 1:
            raise ValueError("d and capacity must be positive")
        self.d = d
        self.capacity = capacity
        self.cue_fn = cue_fn
        self._protos = np.zeros((capacity, d))
        self._ids = np.arange(capacity)
        self._cues: list[np.ndarray] = []
        self.size = 0

    @property
    def prototypes(self) -> np.ndarray:
        return self._protos[: self.size]

    @property
    def id_map(self) -> np.ndarray:
        return self._ids[: self.size]

    @property
    def cues(self) -> list[np.ndarray]:
        return self._cues

    def __len__(self) -> int:
        return self.size

    @property
    def full(self) -> bool:
        return self.size >= self.capacity

    def slot_of(self, index: int) -> int:
        return int(self._ids[index])

    def copy(self) -> "MemoryStore":
        other = MemoryStore(self.d, self.capacity, self.cue_fn)
        other._protos = self._protos.copy()
        other._ids = self._ids.copy()
        other._cues = [c.copy() for c in self._cues]
        other.size = self.size
        return other

    def write_slot(self, slot: int, z: np.ndarray) -> None:
        """Overwrite an existing slot (used by refresh repairs)."""
        if not 0 <= slot < self.size:
            raise IndexError(slot)
        self._protos[slot] = z
        if self.cue_fn is not None:
            self._cues[slot] = self.cue_fn(z)

    def recompute_cues(self) -> None:
        if self.cue_fn is not None:
            self._cues = [self.cue_fn(p) for p in self.prototypes]

    def same_contents(self, other: "MemoryStore") -> bool:
        if self.size != other.size:
            return False
        return (
            np.array_equal(self.prototypes, other.prototypes)
            and np.array_equal(self.id_map, other.id_map)
            and all(np.array_equal(a, b) for a, b in zip(self._cues, other._cues))
        )

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "capacity": self.capacity,
            "size": self.size,
            "prototypes": self.prototypes.tolist(),
            "id_map": self.id_map.tolist(),
            "cues": ["".join("1" if b else "0" for b in c) for c in self._cues],
        }

    @classmethod
    def from_vectors(cls, vectors, capacity: Optional[int] = None,
                     cue_fn: Optional[CueFn] = None) -> "MemoryStore":
        vectors = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
        store = cls(vectors.shape[1], capacity or len(vectors), cue_fn)
        for v in vectors:
            if not insert(store, normalize(v)):
                raise ValueError("more vectors than capacity")
        return store


def _check(z: np.ndarray, store: MemoryStore) -> None:
    if store.size == 0:
        raise EmptyMemory("memory holds no prototypes")
    if z.shape != (store.d,):
        raise DimensionMismatch(f"query shape {z.shape} vs memory dim {store.d}")


def similarities(z, store: MemoryStore) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    _check(z, store)
    return store.prototypes @ z


def best_match(z, store: MemoryStore) -> tuple[int, float]:
    """Index of the most similar prototype; ties go to the lowest index."""
    s = similarities(z, store)
    j = int(np.argmax(s))
    return j, float(min(1.0, max(-1.0, s[j])))


def softmax_weights(scores: np.ndarray, beta: float) -> np.ndarray:
    if not beta > 0:
        raise NonPositiveBeta(f"beta must be > 0, got {beta}")
    a = beta * (scores - scores.max())
    w = np.exp(a)
    return w / w.sum()


def hopfield_weights(z, store: MemoryStore, beta: float) -> np.ndarray:
    return softmax_weights(similarities(z, store), beta)


def hopfield_retrieve(z, store: MemoryStore, beta: float) -> np.ndarray:
    """One associative update: normalized softmax-weighted blend of prototypes."""
    w = hopfield_weights(z, store, beta)
    return normalize(w @ store.prototypes)


def vq_retrieve(z, store: MemoryStore) -> tuple[int, np.ndarray]:
    j, _ = best_match(z, store)
    return j, store.prototypes[j].copy()


def insert(store: MemoryStore, z) -> bool:
    """Append ``z`` as a new slot. A full store is left unchanged."""
    if store.full:
        return False
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (store.d,):
        raise DimensionMismatch(f"vector shape {z.shape} vs memory dim {store.d}")
    slot = store.size
    store._protos[slot] = z
    store._ids[slot] = slot
    if store.cue_fn is not None:
        store._cues.append(store.cue_fn(z))
    store.size += 1
    return True
