"""Transmitter/receiver protocol: hit/miss decisions, packets, bit accounting."""
from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Optional, Protocol, Sequence

import numpy as np

from . import memory
from .core_math import normalize, quantize_latent
from .corruption import CorruptionConfig, CueHasher, RefreshRequest, corrupt, rx_resolve_id
from .errors import ConfigError, InvalidHit
from .memory import MemoryStore
from .rng import derive_rng

METHODS = ("hopfield", "vq")


@dataclass(frozen=True)
class RobustnessConfig:
    """Cue verification at the receiver plus an optional one-shot corruption.

    ``corrupt_at`` is the frame before which the receiver store is corrupted;
    ``None`` means the middle of the session.
    """

    enabled: bool = False
    corruption: CorruptionConfig = field(default_factory=CorruptionConfig)
    corrupt_at: Optional[int] = None
    cue_on_new: bool = True


@dataclass(frozen=True)
class SessionConfig:
    d: int = 48
    tau: float = 0.7
    beta: float = 8.0
    M_max: int = 8
    bits_new_per_dim: int = 8
    method: str = "hopfield"
    omega: float = 1.0
    bits_res: int = 0
    quantize: bool = True
    # ablation: Hopfield decides on the raw best-match similarity
    hopfield_raw_similarity: bool = False
    robustness: RobustnessConfig = field(default_factory=RobustnessConfig)
    master_seed: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError("d", "must be positive")
        if not 0.0 < self.tau < 1.0:
            raise ConfigError("tau", f"must lie in the open interval (0, 1), got {self.tau}")
        if not self.beta > 0:
            raise ConfigError("beta", "must be positive")
        if self.M_max < 1:
            raise ConfigError("M_max", "must be positive")
        if not 1 <= self.bits_new_per_dim <= 16:
            raise ConfigError("bits_new_per_dim", "must lie in [1, 16]")
        if self.method not in METHODS:
            raise ConfigError("method", f"must be one of {METHODS}, got {self.method!r}")
        if not self.omega > 0:
            raise ConfigError("omega", "must be positive")
        if self.bits_res < 0:
            raise ConfigError("bits_res", "must be non-negative")

    @property
    def bits_new(self) -> int:
        return self.bits_new_per_dim * self.d

    @property
    def cue_bits(self) -> int:
        return self.robustness.corruption.cue_bits if self.robustness.enabled else 0

    def replace(self, **changes) -> "SessionConfig":
        from dataclasses import replace
        return replace(self, **changes)


@dataclass(frozen=True)
class Decision:
    hit: bool
    index: Optional[int]
    s_eff: float


def effective_similarity(z, store: MemoryStore, method: str, beta: float,
                         raw: bool = False) -> tuple[Optional[int], float]:
    """Best-match index and the similarity that is compared with tau.

    VQ uses the raw best-match similarity. Hopfield first runs one associative
    update and scores the retrieved state against the raw best match.
    """
    if store.size == 0:
        return None, -1.0
    j, s_max = memory.best_match(z, store)
    if method == "vq" or raw:
        return j, s_max
    z_tilde = memory.hopfield_retrieve(z, store, beta)
    return j, float(np.clip(z_tilde @ store.prototypes[j], -1.0, 1.0))


def tx_decide(z, store: MemoryStore, tau: float, method: str, beta: float,
              raw: bool = False) -> Decision:
    j, s = effective_similarity(z, store, method, beta, raw)
    if j is not None and s >= tau:
        return Decision(True, j, s)
    return Decision(False, j, s)


def index_bits(m: int) -> int:
    """Bits to name one of ``m`` slots, never less than one."""
    return max(1, (m - 1).bit_length())


def frame_bits(decision: Decision, m_before: int, bits_new: int,
               bits_res: int = 0, cue_bits: int = 0) -> int:
    if decision.hit:
        if m_before < 1:
            raise InvalidHit("hit against an empty memory")
        return index_bits(m_before) + bits_res + cue_bits
    return bits_new + bits_res + cue_bits


@dataclass(frozen=True)
class TransmissionRecord:
    t: int
    hit: int
    index: Optional[int]
    bits_id: int
    bits_new: int
    bits_res: int
    bits_cue: int
    s_eff: float
    distortion: float
    refresh: int
    # receiver failed the cue check and a NEW payload was resent
    repaired: int = 0
    m_before: int = 0

    @property
    def bits(self) -> int:
        return self.bits_id + self.bits_new + self.bits_res + self.bits_cue


CSV_FIELDS = ("t", "hit", "index", "bits_id", "bits_new", "bits_res", "bits_cue",
              "s_eff", "distortion", "refresh")


@dataclass
class SessionLog:
    records: list[TransmissionRecord]
    config: SessionConfig
    tx_store: Optional[MemoryStore] = None
    rx_store: Optional[MemoryStore] = None

    @property
    def T(self) -> int:
        return len(self.records)

    @property
    def B_sem(self) -> int:
        return sum(r.bits for r in self.records)

    @property
    def hits(self) -> int:
        return sum(r.hit for r in self.records)

    @property
    def hit_rate(self) -> float:
        return self.hits / self.T if self.T else 0.0

    @property
    def bits_per_frame(self) -> float:
        return self.B_sem / self.T if self.T else 0.0

    @property
    def refreshes(self) -> int:
        return sum(r.refresh for r in self.records)

    @property
    def repairs(self) -> int:
        return sum(r.repaired for r in self.records)

    @property
    def mean_distortion(self) -> float:
        return float(np.mean([r.distortion for r in self.records])) if self.records else 0.0

    def hit_indices(self) -> list[int]:
        return [r.index for r in self.records if r.hit]

    def aggregates(self) -> dict:
        return {
            "T": self.T,
            "B_sem": self.B_sem,
            "hit_rate": self.hit_rate,
            "bits_per_frame": self.bits_per_frame,
            "refresh_count": self.refreshes,
            "repair_count": self.repairs,
            "mean_distortion": self.mean_distortion,
        }


class Codec(Protocol):
    def decode(self, z: np.ndarray) -> np.ndarray: ...


class Session:
    """One transmitter/receiver pair stepping through a latent sequence.

    Without a codec, distortion is the latent-domain mean squared error.
    """

    def __init__(self, config: SessionConfig, codec: Optional[Codec] = None,
                 tx_store: Optional[MemoryStore] = None, rx_store: Optional[MemoryStore] = None,
                 corruption_rng: Optional[np.random.Generator] = None,
                 horizon: Optional[int] = None):
        self.config = config
        self.horizon = horizon
        self.codec = codec
        rob = config.robustness
        cue_fn = None
        if rob.enabled:
            c = rob.corruption
            cue_fn = CueHasher(config.d, c.cue_bits, c.cue_seed)
        self.tx = tx_store.copy() if tx_store is not None else MemoryStore(config.d, config.M_max, cue_fn)
        if cue_fn is not None and self.tx.cue_fn is None:
            self.tx.cue_fn = cue_fn
            self.tx.recompute_cues()
        self.rx = rx_store.copy() if rx_store is not None else self.tx.copy()
        if cue_fn is not None and self.rx.cue_fn is None:
            self.rx.cue_fn = cue_fn
            self.rx.recompute_cues()
        self.corruption_rng = corruption_rng or derive_rng(config.master_seed, "corruption")
        self.records: list[TransmissionRecord] = []

    def _payload(self, z: np.ndarray) -> np.ndarray:
        if self.config.quantize:
            return quantize_latent(z, self.config.bits_new_per_dim).reconstructed
        return normalize(z)

    def _distortion(self, z: np.ndarray, z_hat: np.ndarray, frame) -> float:
        if self.codec is not None and frame is not None:
            return float(np.mean((np.asarray(frame) - self.codec.decode(z_hat)) ** 2))
        return float(np.mean((normalize(z) - z_hat) ** 2))

    def step(self, z, frame=None) -> TransmissionRecord:
        cfg = self.config
        rob = cfg.robustness
        t = len(self.records)
        z = np.asarray(z, dtype=np.float64)
        if rob.enabled and rob.corruption.mode != "none" and t == self._corrupt_frame():
            self.rx = corrupt(self.rx, rob.corruption, self.corruption_rng)

        m_before = self.tx.size
        dec = tx_decide(z, self.tx, cfg.tau, cfg.method, cfg.beta, cfg.hopfield_raw_similarity)
        cue_bits = cfg.cue_bits
        if dec.hit:
            slot = dec.index
            if rob.enabled:
                cue = self.tx.cues[dec.index]
                c = rob.corruption
                slot = rx_resolve_id(dec.index, cue, self.rx, cfg.method, c.tolerance, c.fallback_beta)
            if not isinstance(slot, RefreshRequest):
                z_hat = self.rx.prototypes[slot].copy()
                rec = TransmissionRecord(
                    t, 1, dec.index, index_bits(m_before), 0, cfg.bits_res, cue_bits,
                    dec.s_eff, self._distortion(z, z_hat, frame), 0, 0, m_before)
                self.records.append(rec)
                return rec
            z_hat = self._payload(z)
            self.tx.write_slot(dec.index, z_hat)
            self.rx.write_slot(slot.slot, z_hat)
            rec = TransmissionRecord(
                t, 0, dec.index, 0, cfg.bits_new, cfg.bits_res, cue_bits,
                dec.s_eff, self._distortion(z, z_hat, frame), 1, 1, m_before)
            self.records.append(rec)
            return rec

        z_hat = self._payload(z)
        memory.insert(self.tx, z_hat)
        memory.insert(self.rx, z_hat)
        new_cue = cue_bits if rob.cue_on_new else 0
        rec = TransmissionRecord(
            t, 0, None, 0, cfg.bits_new, cfg.bits_res, new_cue,
            dec.s_eff, self._distortion(z, z_hat, frame), 1, 0, m_before)
        self.records.append(rec)
        return rec

    def _corrupt_frame(self) -> int:
        at = self.config.robustness.corrupt_at
        return (self.horizon or 0) // 2 if at is None else at

    def run(self, latents: Sequence, frames: Optional[Sequence] = None) -> SessionLog:
        if self.horizon is None:
            self.horizon = len(latents)
        for t, z in enumerate(latents):
            self.step(z, None if frames is None else frames[t])
        return SessionLog(self.records, self.config, self.tx, self.rx)


def run_session(latents: Sequence, config: SessionConfig, frames: Optional[Sequence] = None,
                codec: Optional[Codec] = None, tx_store: Optional[MemoryStore] = None) -> SessionLog:
    """Run the protocol over ``latents`` and return the per-frame log."""
    for z in latents:
        if np.shape(z) != (config.d,):
            raise ConfigError("d", f"latent shape {np.shape(z)} does not match d={config.d}")
    return Session(config, codec, tx_store=tx_store).run(latents, frames)


def config_to_dict(config: SessionConfig) -> dict:
    return asdict(config)
