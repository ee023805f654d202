"""Vector primitives: normalization, cosine similarity, scalar quantizer.

Latents are plain 1-D float64 numpy arrays with unit Euclidean norm.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ZeroVector

ZERO_NORM = 1e-12
UNIT_TOL = 1e-9
# norms this close to 1 are left untouched so normalize() is bitwise idempotent
_IDEMPOTENT_SLACK = 8 * np.finfo(np.float64).eps


def normalize(v) -> np.ndarray:
    """Project ``v`` onto the unit sphere.

    Raises
    ------
    ZeroVector
        If the norm is below 1e-12 or any component is non-finite.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ZeroVector("vector has non-finite components")
    n = float(np.linalg.norm(v))
    if n < ZERO_NORM:
        raise ZeroVector(f"cannot normalize vector with norm {n:.3g}")
    if abs(n - 1.0) <= _IDEMPOTENT_SLACK:
        return v.copy()
    return v / n


def is_unit(v, tol: float = UNIT_TOL) -> bool:
    v = np.asarray(v, dtype=np.float64)
    return bool(np.all(np.isfinite(v)) and abs(np.linalg.norm(v) - 1.0) <= tol)


def cosine_sim(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    return float(np.clip(np.dot(a, b), -1.0, 1.0))


@dataclass(frozen=True)
class QuantizedLatent:
    codes: np.ndarray
    bits: int
    reconstructed: np.ndarray

    @property
    def payload_bits(self) -> int:
        return self.bits * int(self.codes.size)


def quantize_latent(z, bits: int = 8) -> QuantizedLatent:
    """Uniform scalar quantization of each component over [-1, 1].

    The dequantized vector is renormalized, so the result stays on the sphere.
    """
    if not 1 <= bits <= 16:
        raise ValueError(f"bits must be in [1, 16], got {bits}")
    z = np.asarray(z, dtype=np.float64)
    levels = (1 << bits) - 1
    codes = np.rint((np.clip(z, -1.0, 1.0) + 1.0) / 2.0 * levels).astype(np.int64)
    # levels is odd, so no grid point sits at 0 and the dequantized vector is non-zero
    return QuantizedLatent(codes=codes, bits=bits, reconstructed=normalize(dequantize(codes, bits)))


def dequantize(codes, bits: int) -> np.ndarray:
    levels = (1 << bits) - 1
    return np.asarray(codes, dtype=np.float64) / levels * 2.0 - 1.0
