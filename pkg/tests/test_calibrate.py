import math

import numpy as np
import pytest

from memsc.calibrate import (SweepCurve, SweepPoint, calibrate_matched_quality, lagrangian_step,
                             match_curves, optimal_tau, soft_hit, sweep_tau)
from memsc.errors import Infeasible, NoMatchedPair
from memsc.metrics import raw_bits_per_frame, summarize
from memsc.protocol import SessionConfig, run_session
from memsc.scenarios import ScenarioSpec, scenario_trial

SMALL = ScenarioSpec(name="stable", T=20, H=16, W=16)


def curve(mses, taus=None, method="vq", psnrs=None, bits=None):
    taus = taus or [0.6 + 0.05 * k for k in range(len(mses))]
    pts = [SweepPoint(tau=t, hit_rate=1.0, bits_per_frame=(bits or [10.0] * len(mses))[k], mse=m,
                      psnr=(psnrs or [10 * math.log10(1 / m) for m in mses])[k], C_R=1.0, trials=30)
           for k, (t, m) in enumerate(zip(taus, mses))]
    return SweepCurve(method, pts)


def test_optimal_tau():
    c = curve([0.3, 0.2, 0.1])
    assert optimal_tau(c, 1.0) == 0.6
    assert optimal_tau(c, 0.15) == pytest.approx(0.7)
    with pytest.raises(Infeasible):
        optimal_tau(c, 0.05)


def test_curve_rejects_unsorted_taus():
    with pytest.raises(ValueError):
        curve([0.3, 0.2], taus=[0.7, 0.6])


def test_soft_hit():
    assert soft_hit(0.8, 0.8) == 0.5
    assert soft_hit(0.81, 0.8, alpha=1e4) > 0.9999
    assert soft_hit(1.0, 0.0, alpha=1.0) == pytest.approx(1 / (1 + math.exp(-1)))
    assert soft_hit(1.0, 0.0, alpha=1.0) == pytest.approx(0.7311, abs=1e-4)
    assert 0.0 <= soft_hit(-1.0, 0.99, alpha=1e4) < 1e-12


def test_lagrangian_step():
    assert lagrangian_step(0.7, 0.3, 0.3, 0.1) == 0.7
    assert lagrangian_step(0.0, 0.1, 0.3, 0.5) == 0.0
    assert lagrangian_step(1.0, 0.5, 0.3, 0.5) == pytest.approx(1.1)


def test_single_point_sweep_matches_direct_run():
    cfg = SessionConfig(tau=0.8, method="vq")
    c = sweep_tau([0.8], SMALL, cfg, trials=2, master_seed=3)
    direct = []
    for k in range(2):
        runs = scenario_trial(SMALL, 3, k)
        logs = [run_session(r.latents, cfg.replace(master_seed=3), frames=r.frames, codec=r.codec)
                for r in runs]
        direct.append(summarize(logs, raw_bits_per_frame(16, 16, 3)))
    p = c.points[0]
    assert p.hit_rate == pytest.approx(np.mean([r.hit_rate for r in direct]))
    assert p.bits_per_frame == pytest.approx(np.mean([r.bits_per_frame for r in direct]))
    assert p.mse == pytest.approx(np.mean([r.mean_mse for r in direct]))


def test_sweep_is_paired_and_jobs_independent():
    grid = [0.6, 0.8, 0.95]
    a = sweep_tau(grid, SMALL, SessionConfig(method="vq"), 3, master_seed=1)
    b = sweep_tau(grid, SMALL, SessionConfig(method="hopfield"), 3, master_seed=1)
    assert a.stream_hash == b.stream_hash
    c = sweep_tau(grid, SMALL, SessionConfig(method="vq"), 3, master_seed=1, jobs=2)
    assert c.points == a.points


def test_drift_hopfield_never_costs_more():
    spec = ScenarioSpec(name="gradual_drift", T=24, H=16, W=16)
    grid = [0.6, 0.7, 0.8]
    h = sweep_tau(grid, spec, SessionConfig(method="hopfield"), 3)
    v = sweep_tau(grid, spec, SessionConfig(method="vq"), 3)
    assert np.all(h.column("bits_per_frame") <= v.column("bits_per_frame") + 1e-12)


def test_match_curves():
    a = curve([0.3, 0.2, 0.1], method="hopfield")
    assert match_curves(a, a, 0.2).tau_a == match_curves(a, a, 0.2).tau_b
    with pytest.raises(NoMatchedPair):
        match_curves(a, a, 0.0)
    far = curve([0.3, 0.2, 0.1], psnrs=[40.0, 41.0, 42.0])
    with pytest.raises(NoMatchedPair):
        match_curves(a, far, 0.2)
    cheap = curve([0.3, 0.2, 0.1], bits=[12.0, 5.0, 9.0])
    pair = match_curves(cheap, cheap, 0.2)
    assert pair.tau_a == pair.tau_b == pytest.approx(0.65)


def test_calibration_identical_methods_and_stable_band():
    pair = calibrate_matched_quality(SMALL, SessionConfig(), 0.2, (0.6, 0.75, 0.9), trials=2,
                                     methods=("vq", "vq"))
    assert pair.tau_a == pair.tau_b
    pair = calibrate_matched_quality(SMALL, SessionConfig(), 0.2, (0.6, 0.75, 0.9), trials=2)
    assert pair.psnr_gap <= 0.2
