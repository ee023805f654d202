"""Threshold sweeps and threshold selection under a distortion constraint."""
from __future__ import annotations

import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import Infeasible, NoMatchedPair
from .metrics import psnr, raw_bits_per_frame, summarize
from .protocol import SessionConfig, run_session
from .scenarios import RegimeRun, ScenarioSpec, scenario_trial

DEFAULT_GRID = tuple(float(t) for t in np.round(np.linspace(0.60, 0.95, 15), 10))


@dataclass(frozen=True)
class SweepPoint:
    tau: float
    hit_rate: float
    bits_per_frame: float
    mse: float
    psnr: float
    C_R: float
    trials: int
    # standard errors of the trial means
    hit_rate_se: float = 0.0
    bits_se: float = 0.0
    mse_se: float = 0.0
    C_R_se: float = 0.0
    index_entropy: float = 0.0


@dataclass
class SweepCurve:
    method: str
    points: list[SweepPoint]
    stream_hash: str = ""
    scenario: str = ""

    def __post_init__(self):
        taus = [p.tau for p in self.points]
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise ValueError("sweep thresholds must be strictly increasing")

    @property
    def taus(self) -> list[float]:
        return [p.tau for p in self.points]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(p, name) for p in self.points], dtype=np.float64)


def _stderr(values) -> float:
    v = np.asarray(values, dtype=np.float64)
    return float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0


def stream_hash(trials: Sequence[Sequence[RegimeRun]]) -> str:
    h = hashlib.sha256()
    for runs in trials:
        for run in runs:
            h.update(run.regime.encode())
            h.update(np.ascontiguousarray(run.latents).tobytes())
    return h.hexdigest()[:16]


def run_trial(runs: Sequence[RegimeRun], config: SessionConfig):
    return [run_session(r.latents, config, frames=r.frames, codec=r.codec) for r in runs]


def _trial_metrics(args):
    spec, config, master_seed, trial, taus, omega, raw = args
    runs = scenario_trial(spec, master_seed, trial)
    out = []
    for tau in taus:
        logs = run_trial(runs, config.replace(tau=tau, master_seed=master_seed))
        rep = summarize(logs, raw, omega)
        out.append((rep.hit_rate, rep.bits_per_frame, rep.mean_mse, rep.C_R, rep.index_entropy))
    return out, stream_hash([runs])


def sweep_tau(tau_grid: Sequence[float], spec: ScenarioSpec, config: SessionConfig,
              trials: int, master_seed: int = 0, jobs: int = 1,
              raw_bits_frame: Optional[float] = None) -> SweepCurve:
    """Average session metrics over ``trials`` independent trials at each threshold.

    Trial ``k`` uses the same latent streams for every threshold and method,
    so two sweeps with the same seed are paired.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    taus = [float(t) for t in tau_grid]
    if any(not 0 < t < 1 for t in taus):
        raise ValueError("thresholds must lie in (0, 1)")
    raw = raw_bits_frame or raw_bits_per_frame(spec.H, spec.W, spec.C)
    tasks = [(spec, config, master_seed, k, taus, config.omega, raw) for k in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_trial_metrics, tasks))
    else:
        results = [_trial_metrics(t) for t in tasks]
    per = np.array([r[0] for r in results])  # trials x taus x metrics
    h = hashlib.sha256("".join(r[1] for r in results).encode()).hexdigest()[:16]
    points = []
    for i, tau in enumerate(taus):
        m = per[:, i, :]
        mse = float(m[:, 2].mean())
        points.append(SweepPoint(
            tau=tau, hit_rate=float(m[:, 0].mean()), bits_per_frame=float(m[:, 1].mean()),
            mse=mse, psnr=psnr(mse), C_R=float(m[:, 3].mean()), trials=trials,
            hit_rate_se=_stderr(m[:, 0]), bits_se=_stderr(m[:, 1]), mse_se=_stderr(m[:, 2]),
            C_R_se=_stderr(m[:, 3]), index_entropy=float(m[:, 4].mean())))
    return SweepCurve(config.method, points, stream_hash=h, scenario=spec.name)


def optimal_tau(curve: SweepCurve, D0: float) -> float:
    """Smallest swept threshold whose mean distortion meets ``D0``."""
    for p in curve.points:
        if p.mse <= D0:
            return p.tau
    raise Infeasible(f"no threshold reaches mean distortion <= {D0}")


def soft_hit(s: float, tau: float, alpha: float = 50.0) -> float:
    """Logistic relaxation of the hit indicator."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    x = alpha * (s - tau)
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def lagrangian(bits_per_frame: float, mean_distortion: float, D0: float, lam: float) -> float:
    return bits_per_frame + lam * (mean_distortion - D0)


def lagrangian_step(lam: float, mean_distortion: float, D0: float, step: float) -> float:
    """Projected multiplier ascent: grows while the distortion target is violated."""
    if not step > 0:
        raise ValueError("step must be positive")
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    return max(0.0, lam + step * (mean_distortion - D0))


@dataclass(frozen=True)
class MatchedPair:
    tau_a: float
    tau_b: float
    psnr_a: float
    psnr_b: float
    bits_a: float
    bits_b: float
    methods: tuple = ("hopfield", "vq")
    curves: tuple = field(default=(), compare=False, repr=False)

    @property
    def psnr_gap(self) -> float:
        return abs(self.psnr_a - self.psnr_b)


def match_curves(curve_a: SweepCurve, curve_b: SweepCurve, band_db: float,
                 D0: Optional[float] = None) -> MatchedPair:
    """Pick the threshold pair with PSNRs within ``band_db`` and least total bits."""
    if not band_db > 0:
        raise NoMatchedPair("a non-positive PSNR band admits no pair")
    best = None
    for pa in curve_a.points:
        if D0 is not None and pa.mse > D0:
            continue
        for pb in curve_b.points:
            if D0 is not None and pb.mse > D0:
                continue
            if abs(pa.psnr - pb.psnr) > band_db:
                continue
            key = (pa.bits_per_frame + pb.bits_per_frame, pa.tau, pb.tau)
            if best is None or key < best[0]:
                best = (key, pa, pb)
    if best is None:
        raise NoMatchedPair(f"no threshold pair within {band_db} dB meets the target")
    _, pa, pb = best
    return MatchedPair(pa.tau, pb.tau, pa.psnr, pb.psnr, pa.bits_per_frame, pb.bits_per_frame,
                       (curve_a.method, curve_b.method), (curve_a, curve_b))


def calibrate_matched_quality(spec: ScenarioSpec, config: SessionConfig, band_db: float = 0.2,
                              tau_grid: Sequence[float] = DEFAULT_GRID, trials: int = 5,
                              master_seed: int = 0, D0: Optional[float] = None,
                              methods: tuple = ("hopfield", "vq"), jobs: int = 1) -> MatchedPair:
    if not band_db > 0:
        raise NoMatchedPair("a non-positive PSNR band admits no pair")
    curves = [sweep_tau(tau_grid, spec, config.replace(method=m), trials, master_seed, jobs)
              for m in methods]
    return match_curves(curves[0], curves[1], band_db, D0)
