"""Memory-augmented semantic communication simulator."""

__version__ = "0.1.0"

from .core_math import cosine_sim, normalize, quantize_latent
from .memory import MemoryStore, best_match, hopfield_retrieve, hopfield_weights, insert, vq_retrieve
from .protocol import SessionConfig, RobustnessConfig, run_session, tx_decide, frame_bits
from .corruption import CorruptionConfig, simhash_cue, verify_cue, rx_resolve_id
from .metrics import summarize, semantic_efficiency, reasoning_capacity, index_entropy, psnr
from .scenarios import ScenarioSpec, RegimeConfig, generate_frames, generate_separated_prototypes
from .calibrate import sweep_tau, optimal_tau, calibrate_matched_quality

__all__ = [
    "cosine_sim", "normalize", "quantize_latent",
    "MemoryStore", "best_match", "hopfield_retrieve", "hopfield_weights", "insert", "vq_retrieve",
    "SessionConfig", "RobustnessConfig", "run_session", "tx_decide", "frame_bits",
    "CorruptionConfig", "simhash_cue", "verify_cue", "rx_resolve_id",
    "summarize", "semantic_efficiency", "reasoning_capacity", "index_entropy", "psnr",
    "ScenarioSpec", "RegimeConfig", "generate_frames", "generate_separated_prototypes",
    "sweep_tau", "optimal_tau", "calibrate_matched_quality",
]
