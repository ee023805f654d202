"""Synthetic content: frame regimes, a fixed projection codec, drift latents.

The codec is a stand-in for a learned autoencoder: a seeded Gaussian
projection followed by normalization, decoded with the scaled adjoint.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage, optimize

from .core_math import normalize
from .errors import InfeasibleSeparation, InvalidDims
from .rng import derive_rng

REGIMES = (
    "static", "low_motion", "high_motion", "scene_change",
    "repetitive_return", "cam_shake", "high_texture", "illum_change",
)

SCENARIOS = {
    "stable": ("static", "low_motion", "repetitive_return"),
    "gradual_drift": ("illum_change", "cam_shake"),
    "moderate": ("high_motion", "high_texture"),
}


@dataclass(frozen=True)
class RegimeConfig:
    regime: str
    T: int = 64
    H: int = 32
    W: int = 32
    C: int = 3
    seed: int = 0
    noise: float = 0.005
    motion_period: int = 4          # low_motion: frames per 1 px step
    motion_step: Optional[int] = None   # high_motion: px per frame, default H // 4
    scene_count: int = 3
    return_period: Optional[int] = None  # repetitive_return: default T // 8
    shake_amplitude: int = 2
    illum_start: float = 0.5
    illum_end: float = 1.0
    blob_count: int = 12
    blob_sigma: float = 3.0
    background: float = 0.35

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise InvalidDims(f"unknown regime {self.regime!r}")
        if min(self.T, self.H, self.W, self.C) < 1:
            raise InvalidDims("T, H, W, C must be positive")


def _scene(rng: np.random.Generator, cfg: RegimeConfig) -> np.ndarray:
    """Coloured Gaussian blobs over a flat background, values in [0, 1]."""
    H, W, C = cfg.H, cfg.W, cfg.C
    yy, xx = np.mgrid[0:H, 0:W]
    img = np.full((H, W, C), cfg.background)
    for _ in range(cfg.blob_count):
        cy, cx = rng.uniform(0, H), rng.uniform(0, W)
        s = cfg.blob_sigma * rng.uniform(0.6, 1.4)
        # toroidal distance so rolled copies stay seamless
        dy = np.minimum(abs(yy - cy), H - abs(yy - cy))
        dx = np.minimum(abs(xx - cx), W - abs(xx - cx))
        g = np.exp(-(dy ** 2 + dx ** 2) / (2 * s * s))
        img += g[..., None] * rng.uniform(0.3, 1.0, size=C)
    return np.clip(img, 0.0, 1.0)


def _texture(rng: np.random.Generator, cfg: RegimeConfig) -> np.ndarray:
    field_ = rng.random((cfg.H, cfg.W, cfg.C))
    field_ = ndimage.gaussian_filter(field_, sigma=(0.7, 0.7, 0), mode="wrap")
    lo, hi = field_.min(), field_.max()
    return (field_ - lo) / max(hi - lo, 1e-12)


def _shift(img: np.ndarray, dy: int, dx: int) -> np.ndarray:
    return np.roll(img, (dy, dx), axis=(0, 1))


def generate_frames(cfg: RegimeConfig) -> np.ndarray:
    """Frames of shape (T, H, W, C) for one regime, fully determined by the seed."""
    rng = derive_rng(cfg.seed, "frames", cfg.regime)
    T = cfg.T
    base = _scene(rng, cfg)
    frames = np.empty((T, cfg.H, cfg.W, cfg.C))
    r = cfg.regime
    if r == "static" or r == "illum_change":
        ramp = np.linspace(cfg.illum_start, cfg.illum_end, T) if r == "illum_change" else np.ones(T)
        for t in range(T):
            frames[t] = base * ramp[t]
    elif r == "low_motion":
        for t in range(T):
            frames[t] = _shift(base, 0, t // cfg.motion_period)
    elif r == "high_motion":
        step = cfg.motion_step if cfg.motion_step is not None else max(1, cfg.H // 4)
        step2 = max(1, step // 2 + 1)
        for t in range(T):
            frames[t] = _shift(base, t * step2, t * step)
    elif r == "scene_change":
        scenes = [base] + [_scene(rng, cfg) for _ in range(cfg.scene_count - 1)]
        for t in range(T):
            frames[t] = scenes[scene_index(t, T, cfg.scene_count)]
    elif r == "repetitive_return":
        other = _scene(rng, cfg)
        period = cfg.return_period or max(1, T // 8)
        for t in range(T):
            frames[t] = base if (t // period) % 2 == 0 else other
    elif r == "cam_shake":
        a = cfg.shake_amplitude
        jit = rng.integers(-a, a + 1, size=(T, 2))
        for t in range(T):
            frames[t] = _shift(base, int(jit[t, 0]), int(jit[t, 1]))
    elif r == "high_texture":
        for t in range(T):
            frames[t] = _texture(rng, cfg)
    if cfg.noise > 0:
        frames += rng.uniform(-cfg.noise, cfg.noise, size=frames.shape)
    return np.clip(frames, 0.0, 1.0)


def scene_index(t: int, T: int, k: int) -> int:
    return min(k - 1, (t * k) // T)


class ProjectionCodec:
    """Fixed Gaussian projection encoder with an adjoint decoder."""

    def __init__(self, d: int, frame_shape: Sequence[int], seed: int):
        self.d = d
        self.frame_shape = tuple(frame_shape)
        n = int(np.prod(self.frame_shape))
        self.P = derive_rng(seed, "projection", d, n).standard_normal((d, n))
        self.scale = 1.0

    def encode(self, frame) -> np.ndarray:
        x = np.asarray(frame, dtype=np.float64)
        if x.shape != self.frame_shape:
            raise InvalidDims(f"frame shape {x.shape} vs codec {self.frame_shape}")
        return normalize(self.P @ x.ravel())

    def encode_many(self, frames) -> np.ndarray:
        return np.stack([self.encode(f) for f in frames])

    def decode(self, z) -> np.ndarray:
        y = self.scale * (self.P.T @ np.asarray(z, dtype=np.float64))
        return np.clip(y, 0.0, 1.0).reshape(self.frame_shape)

    def calibrate(self, frame) -> float:
        """Pick the decoder gain minimizing MSE on ``frame``; returns it."""
        x = np.asarray(frame, dtype=np.float64).ravel()
        y = self.P.T @ self.encode(frame)
        c_ls = max(float(x @ y) / float(y @ y), 1e-9)

        def mse(c):
            return float(np.mean((np.clip(c * y, 0.0, 1.0) - x) ** 2))

        # clipping makes the objective flat far out, so bracket on a log grid first
        grid = c_ls * np.logspace(-2, 4, 61)
        k = int(np.argmin([mse(c) for c in grid]))
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
        res = optimize.minimize_scalar(mse, bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-10 * hi})
        self.scale = float(res.x) if res.fun <= mse(grid[k]) else float(grid[k])
        return self.scale


def encode_frame(frame, codec: ProjectionCodec) -> np.ndarray:
    return codec.encode(frame)


def decode_latent(z, codec: ProjectionCodec) -> np.ndarray:
    return codec.decode(z)


@dataclass(frozen=True)
class DriftConfig:
    mu_star: np.ndarray
    epsilon: float
    T: int
    distribution: str = "uniform_ball"
    sigma: Optional[float] = None
    renormalize: bool = False
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.distribution not in ("uniform_ball", "gaussian"):
            raise ValueError(f"unknown drift distribution {self.distribution!r}")
        if self.distribution == "gaussian" and (self.sigma is None or not 0 < self.sigma <= self.epsilon):
            raise ValueError("gaussian drift needs 0 < sigma <= epsilon")


def sample_drift(rng: np.random.Generator, n: int, d: int, epsilon: float,
                 distribution: str = "uniform_ball", sigma: Optional[float] = None) -> np.ndarray:
    """``n`` zero-mean drift vectors with norm at most ``epsilon``."""
    if distribution == "uniform_ball":
        g = rng.standard_normal((n, d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = epsilon * rng.random(n) ** (1.0 / d)
        return g * r[:, None]
    out = np.empty((0, d))
    while len(out) < n:
        cand = rng.normal(0.0, sigma / math.sqrt(d), size=(2 * (n - len(out)) + 8, d))
        cand = cand[np.linalg.norm(cand, axis=1) <= epsilon]
        out = np.vstack([out, cand])
    return out[:n]


def generate_drift_latents(cfg: DriftConfig) -> np.ndarray:
    mu = np.asarray(cfg.mu_star, dtype=np.float64)
    rng = derive_rng(cfg.seed, "drift")
    z = mu + sample_drift(rng, cfg.T, mu.shape[0], cfg.epsilon, cfg.distribution, cfg.sigma)
    if cfg.renormalize:
        z /= np.linalg.norm(z, axis=1, keepdims=True)
    return z


def generate_separated_prototypes(M: int, d: int, delta: float, seed: int,
                                  max_attempts: int = 100_000) -> np.ndarray:
    """``M`` random unit vectors with pairwise distance at least ``delta``.

    Sequential rejection sampling; raises after ``max_attempts`` candidates.
    """
    rng = derive_rng(seed, "prototypes", M, d)
    kept: list[np.ndarray] = []
    attempts = 0
    batch = 256
    while attempts < max_attempts:
        cand = rng.standard_normal((min(batch, max_attempts - attempts), d))
        cand /= np.linalg.norm(cand, axis=1, keepdims=True)
        for c in cand:
            attempts += 1
            if all(np.linalg.norm(c - k) >= delta for k in kept):
                kept.append(c)
                if len(kept) == M:
                    return np.stack(kept)
    raise InfeasibleSeparation(
        f"could not place {M} unit vectors in d={d} with separation {delta} "
        f"after {max_attempts} attempts")


def min_pairwise_distance(vectors) -> float:
    v = np.asarray(vectors)
    best = math.inf
    for i in range(len(v)):
        for j in range(i + 1, len(v)):
            best = min(best, float(np.linalg.norm(v[i] - v[j])))
    return best


@dataclass
class RegimeRun:
    """One regime's frames and latents for one trial."""

    regime: str
    frames: np.ndarray
    latents: np.ndarray
    codec: ProjectionCodec


@dataclass(frozen=True)
class ScenarioSpec:
    """What to generate for a scenario trial. ``overrides`` maps regime -> RegimeConfig fields."""

    name: str = "stable"
    regimes: Optional[tuple] = None
    T: int = 64
    H: int = 32
    W: int = 32
    C: int = 3
    d: int = 48
    overrides: dict = field(default_factory=dict)

    def regime_list(self) -> tuple:
        if self.regimes:
            return tuple(self.regimes)
        if self.name in SCENARIOS:
            return SCENARIOS[self.name]
        if self.name in REGIMES:
            return (self.name,)
        raise InvalidDims(f"unknown scenario {self.name!r}")


def scenario_trial(spec: ScenarioSpec, master_seed: int, trial: int) -> list[RegimeRun]:
    """Generate every regime of ``spec`` for one trial.

    The projection is drawn once per (seed, trial) and shared across regimes
    and methods, so comparisons between methods see identical latents.
    """
    codec_seed = int(derive_rng(master_seed, "codec", trial).integers(2 ** 31))
    runs = []
    for regime in spec.regime_list():
        kw = dict(spec.overrides.get(regime, {}))
        frame_seed = int(derive_rng(master_seed, "regime", regime, trial).integers(2 ** 31))
        cfg = RegimeConfig(regime=regime, T=spec.T, H=spec.H, W=spec.W, C=spec.C,
                           seed=frame_seed, **kw)
        frames = generate_frames(cfg)
        codec = ProjectionCodec(spec.d, frames.shape[1:], codec_seed)
        codec.calibrate(frames[0])
        runs.append(RegimeRun(regime, frames, codec.encode_many(frames), codec))
    return runs


def export_frames(frames: np.ndarray, path, **meta) -> None:
    """Write frames as row-major float32 ``path`` plus a ``path.json`` header."""
    path = Path(path)
    arr = np.ascontiguousarray(frames, dtype="<f4")
    arr.tofile(path)
    header = {"shape": list(arr.shape), "dtype": "float32", "order": "C", "endianness": "little"}
    header.update(meta)
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(header, indent=2, sort_keys=True))


def load_frames(path) -> np.ndarray:
    path = Path(path)
    header = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    return np.fromfile(path, dtype="<f4").reshape(header["shape"])


def load_latents_csv(path, d: Optional[int] = None) -> np.ndarray:
    """Read externally supplied latents: one row per frame, d columns, normalized on load."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].startswith("#"):
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                if rows:
                    raise
                continue  # header line
    arr = np.array(rows, dtype=np.float64)
    if d is not None and arr.shape[1] != d:
        raise InvalidDims(f"latent CSV has {arr.shape[1]} columns, expected {d}")
    return np.stack([normalize(r) for r in arr])


def regime_config_dict(cfg: RegimeConfig) -> dict:
    return asdict(cfg)
