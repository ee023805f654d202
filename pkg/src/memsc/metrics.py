"""Scalar evaluation quantities for a session or a pooled set of sessions."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, asdict
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, DivByZero, EmptyCounts


def semantic_efficiency(hits: float, T: float, B_raw: float, B_sem: float) -> float:
    """Hit rate times compression ratio."""
    if T <= 0 or B_sem <= 0:
        raise DivByZero("T and B_sem must be positive")
    return (hits / T) * (B_raw / B_sem)


def reasoning_capacity(eta: float, omega: float = 1.0) -> float:
    if eta < 0:
        raise ValueError("eta must be non-negative")
    if not omega > 0:
        raise ValueError("omega must be positive")
    return omega * math.log2(1.0 + eta)


def index_entropy(counts) -> float:
    """Shannon entropy (bits) of hit-index usage.

    ``counts`` is either a sequence of per-index counts or a mapping.
    """
    values = np.asarray(list(counts.values()) if hasattr(counts, "values") else list(counts),
                        dtype=np.float64)
    if values.size == 0 or values.sum() <= 0:
        raise EmptyCounts("no hits to compute entropy over")
    if np.any(values < 0):
        raise ValueError("counts must be non-negative")
    p = values[values > 0] / values.sum()
    return float(max(0.0, -np.sum(p * np.log2(p))))


def distortion_mse(x, x_hat) -> float:
    x = np.asarray(x, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x.shape != x_hat.shape:
        raise DimensionMismatch(f"shapes differ: {x.shape} vs {x_hat.shape}")
    return float(np.mean((x - x_hat) ** 2))


def psnr(mse: float, peak: float = 1.0) -> float:
    """PSNR in dB; identical signals give ``math.inf``."""
    if mse < 0:
        raise ValueError("mse must be non-negative")
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def raw_bits_per_frame(H: int, W: int, C: int, bits_per_pixel: int = 8) -> int:
    return H * W * C * bits_per_pixel


@dataclass(frozen=True)
class MetricsReport:
    hit_rate: float
    bits_per_frame: float
    B_raw: float
    B_sem: float
    compression_ratio: float
    eta: float
    C_R: float
    index_entropy: float
    mean_mse: float
    psnr: float
    T: int
    raw_bits_per_frame: float

    def to_dict(self) -> dict:
        d = asdict(self)
        if math.isinf(d["psnr"]):
            d["psnr"] = "inf"
        return d


def summarize(logs: Iterable, raw_bits_frame: float, omega: float = 1.0) -> MetricsReport:
    """Pool one or more session logs into a single report.

    Bits, hits and frames are summed across logs; hit indices are counted per
    session since indices name different prototypes in different sessions.
    """
    logs = list(logs)
    T = sum(log.T for log in logs)
    B_sem = sum(log.B_sem for log in logs)
    hits = sum(log.hits for log in logs)
    B_raw = raw_bits_frame * T
    eta = semantic_efficiency(hits, T, B_raw, B_sem)
    mses = [r.distortion for log in logs for r in log.records]
    mean_mse = float(np.mean(mses)) if mses else 0.0
    counts: Counter = Counter()
    for k, log in enumerate(logs):
        counts.update((k, j) for j in log.hit_indices())
    h_s = index_entropy(counts) if counts else 0.0
    return MetricsReport(
        hit_rate=hits / T,
        bits_per_frame=B_sem / T,
        B_raw=B_raw,
        B_sem=B_sem,
        compression_ratio=B_raw / B_sem,
        eta=eta,
        C_R=reasoning_capacity(eta, omega),
        index_entropy=h_s,
        mean_mse=mean_mse,
        psnr=psnr(mean_mse),
        T=T,
        raw_bits_per_frame=raw_bits_frame,
    )


def mean_ci(values: Sequence[float], z: float = 1.96) -> tuple[float, float]:
    """Sample mean and normal-approximation half-width."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("no values")
    if v.size == 1:
        return float(v[0]), 0.0
    return float(v.mean()), float(z * v.std(ddof=1) / math.sqrt(v.size))
