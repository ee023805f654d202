"""Receiver corruption grid: bits and refreshes per mode, level and method."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corruption import CorruptionConfig
from .protocol import RobustnessConfig, Session, SessionConfig
from .rng import derive_rng
from .scenarios import ScenarioSpec, scenario_trial

DEFAULT_LEVELS = {
    "id_desync": (0.0, 0.1, 0.3, 0.5),
    "vec_perturb": (0.0, 0.05, 0.10, 0.20),
}

GRID_FIELDS = ("mode", "level", "method", "bits_per_frame", "refresh_count", "delta_bits",
               "repair_count", "baseline_bits_per_frame", "baseline_refresh_count", "trials")


@dataclass(frozen=True)
class GridRow:
    mode: str
    level: float
    method: str
    bits_per_frame: float
    refresh_count: float
    delta_bits: float
    repair_count: float
    baseline_bits_per_frame: float
    baseline_refresh_count: float
    trials: int
    # per-trial totals, kept for paired comparisons
    trial_bits: tuple = field(default=(), repr=False)
    trial_refreshes: tuple = field(default=(), repr=False)
    baseline_trial_bits: tuple = field(default=(), repr=False)

    def row(self) -> dict:
        return {k: getattr(self, k) for k in GRID_FIELDS}


def _session_totals(runs, config: SessionConfig, master_seed: int, trial: int):
    bits = refreshes = repairs = frames = 0
    for run in runs:
        rng = derive_rng(master_seed, "corrupt", trial, run.regime)
        log = Session(config, run.codec, corruption_rng=rng).run(run.latents, run.frames)
        bits += log.B_sem
        refreshes += log.refreshes
        repairs += log.repairs
        frames += log.T
    return bits, refreshes, repairs, frames


def robustness_grid(spec: ScenarioSpec, config: SessionConfig, trials: int = 5,
                    master_seed: int = 0, levels: dict = DEFAULT_LEVELS,
                    methods: Sequence[str] = ("hopfield", "vq"),
                    cue: CorruptionConfig = CorruptionConfig()) -> list[GridRow]:
    """Run every (mode, level, method) cell on paired trials.

    The baseline for each method is the same session with cues on and no
    corruption; ``delta_bits`` is the mean per-trial bit difference to it.
    """
    acc: dict = {}
    for k in range(trials):
        runs = scenario_trial(spec, master_seed, k)
        for method in methods:
            base_cfg = config.replace(method=method, master_seed=master_seed, robustness=RobustnessConfig(
                enabled=True, corruption=CorruptionConfig("none", 0.0, cue.cue_bits, cue.cue_tolerance,
                                                          cue.cue_seed, cue.fallback_beta)))
            base = _session_totals(runs, base_cfg, master_seed, k)
            acc.setdefault(("baseline", method), []).append(base)
            for mode, lvls in levels.items():
                for level in lvls:
                    cc = CorruptionConfig(mode, float(level), cue.cue_bits, cue.cue_tolerance,
                                          cue.cue_seed, cue.fallback_beta)
                    cfg = base_cfg.replace(robustness=RobustnessConfig(enabled=True, corruption=cc))
                    acc.setdefault((mode, float(level), method), []).append(
                        _session_totals(runs, cfg, master_seed, k))
    rows = []
    for mode, lvls in levels.items():
        for level in lvls:
            for method in methods:
                cell = np.array(acc[(mode, float(level), method)], dtype=np.float64)
                base = np.array(acc[("baseline", method)], dtype=np.float64)
                frames = cell[:, 3].sum()
                rows.append(GridRow(
                    mode=mode, level=float(level), method=method,
                    bits_per_frame=float(cell[:, 0].sum() / frames),
                    refresh_count=float(cell[:, 1].mean()),
                    delta_bits=float((cell[:, 0] - base[:, 0]).mean()),
                    repair_count=float(cell[:, 2].mean()),
                    baseline_bits_per_frame=float(base[:, 0].sum() / base[:, 3].sum()),
                    baseline_refresh_count=float(base[:, 1].mean()),
                    trials=trials,
                    trial_bits=tuple(int(b) for b in cell[:, 0]),
                    trial_refreshes=tuple(int(r) for r in cell[:, 1]),
                    baseline_trial_bits=tuple(int(b) for b in base[:, 0]),
                ))
    return rows
