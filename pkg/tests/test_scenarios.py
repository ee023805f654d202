import math

import numpy as np
import pytest

from memsc.core_math import cosine_sim
from memsc.errors import InfeasibleSeparation, InvalidDims
from memsc.scenarios import (DriftConfig, ProjectionCodec, RegimeConfig, ScenarioSpec, export_frames,
                             generate_drift_latents, generate_frames, generate_separated_prototypes,
                             load_frames, load_latents_csv, min_pairwise_distance, sample_drift,
                             scenario_trial)


def frames(regime, **kw):
    return generate_frames(RegimeConfig(regime=regime, seed=kw.pop("seed", 3), **kw))


def test_frames_deterministic_and_in_range():
    for regime in ("static", "low_motion", "high_motion", "scene_change", "repetitive_return",
                   "cam_shake", "high_texture", "illum_change"):
        a = frames(regime, T=16)
        assert a.shape == (16, 32, 32, 3)
        assert a.min() >= 0.0 and a.max() <= 1.0
        np.testing.assert_array_equal(a, frames(regime, T=16))


def test_static_frames_barely_change():
    for seed in range(5):
        f = frames("static", seed=seed)
        assert np.abs(f[0] - f[-1]).max() <= 0.02


def test_scene_change_spikes_at_switches():
    T, k = 60, 3
    f = frames("scene_change", T=T, scene_count=k)
    mse = np.mean((f[1:] - f[:-1]) ** 2, axis=(1, 2, 3))
    spikes = sorted(np.argsort(mse)[-(k - 1):] + 1)
    assert spikes == [20, 40]
    assert np.sort(mse)[-(k - 1)] > 10 * np.sort(mse)[-k]


def test_repetitive_return_recurs():
    T = 64
    f = frames("repetitive_return", T=T)
    period = T // 8
    # frame 2*period is back at the phase of frame 0
    assert np.abs(f[2 * period] - f[0]).max() <= 4 * 0.005 + 1e-12


def test_unknown_regime():
    with pytest.raises(InvalidDims):
        RegimeConfig(regime="rain")


def test_encoder_contract():
    f = frames("static", T=4)
    codec = ProjectionCodec(48, f.shape[1:], seed=11)
    z = codec.encode(f[0])
    np.testing.assert_array_equal(z, codec.encode(f[0].copy()))
    np.testing.assert_allclose(codec.encode(0.9 * f[0]), z, atol=1e-12)
    assert codec.P.shape == (48, 32 * 32 * 3)
    with pytest.raises(InvalidDims):
        codec.encode(f[0][:16])


def test_static_latents_are_stable():
    f = frames("static")
    codec = ProjectionCodec(48, f.shape[1:], seed=5)
    z = codec.encode_many(f)
    assert min(cosine_sim(z[t], z[t + 1]) for t in range(len(z) - 1)) >= 0.999


def test_decoder_contract():
    base = frames("static", T=1)[0]
    codec = ProjectionCodec(48, base.shape, seed=2)
    codec.calibrate(base)
    out = codec.decode(codec.encode(base))
    assert out.min() >= 0.0 and out.max() <= 1.0
    np.testing.assert_array_equal(out, codec.decode(codec.encode(base)))


@pytest.mark.xfail(strict=True, reason="adjoint decoder error tracks frame energy; bright blob "
                                       "scenes lose to mid-grey texture")
def test_static_roundtrip_not_worse_than_texture():
    base = frames("static", T=1)[0]
    tex = frames("high_texture", T=1)[0]
    codec = ProjectionCodec(48, base.shape, seed=2)
    codec.calibrate(base)
    out = codec.decode(codec.encode(base))
    assert out.min() >= 0.0 and out.max() <= 1.0
    np.testing.assert_array_equal(out, codec.decode(codec.encode(base)))
    tcodec = ProjectionCodec(48, tex.shape, seed=2)
    tcodec.calibrate(tex)
    mse_base = np.mean((out - base) ** 2)
    mse_tex = np.mean((tcodec.decode(tcodec.encode(tex)) - tex) ** 2)
    assert mse_base <= mse_tex


def test_calibrated_gain_beats_neighbours():
    base = frames("low_motion", T=1)[0]
    codec = ProjectionCodec(48, base.shape, seed=9)
    c = codec.calibrate(base)
    z = codec.encode(base)

    def mse(gain):
        codec.scale = gain
        return np.mean((codec.decode(z) - base) ** 2)

    best = mse(c)
    assert best <= mse(c * 1.05) and best <= mse(c * 0.95)


def test_drift_degenerate_and_bounded():
    rng = np.random.default_rng(0)
    mu = rng.standard_normal(48)
    mu /= np.linalg.norm(mu)
    z = generate_drift_latents(DriftConfig(mu, 1e-12, 20))
    np.testing.assert_allclose(z, np.tile(mu, (20, 1)), atol=1e-9)
    for dist, sigma in (("uniform_ball", None), ("gaussian", 0.1)):
        z = generate_drift_latents(DriftConfig(mu, 0.15, 500, dist, sigma, seed=4))
        assert np.all(np.linalg.norm(z - mu, axis=1) <= 0.15 + 1e-15)
    z = generate_drift_latents(DriftConfig(mu, 0.15, 50, renormalize=True))
    np.testing.assert_allclose(np.linalg.norm(z, axis=1), 1.0, atol=1e-12)


def test_drift_is_zero_mean():
    n, d, eps = 100_000, 48, 0.15
    delta = sample_drift(np.random.default_rng(12), n, d, eps)
    # per-component sd of a uniform ball draw is eps / sqrt(d + 2)
    sd = eps / math.sqrt(d + 2)
    assert np.all(np.abs(delta.mean(axis=0)) <= 3 * sd / math.sqrt(n))


def test_separated_prototypes():
    p = generate_separated_prototypes(2, 2, math.sqrt(2), seed=0)
    assert float(p[0] @ p[1]) <= 1e-12
    for m, d, delta in ((8, 48, 1.0), (16, 8, 1.0), (5, 3, 1.2)):
        p = generate_separated_prototypes(m, d, delta, seed=m)
        np.testing.assert_allclose(np.linalg.norm(p, axis=1), 1.0, atol=1e-12)
        brute = min(np.linalg.norm(p[i] - p[j]) for i in range(m) for j in range(i + 1, m))
        assert brute >= delta and brute == pytest.approx(min_pairwise_distance(p))
    with pytest.raises(InfeasibleSeparation):
        generate_separated_prototypes(100, 2, 1.9, seed=0, max_attempts=20_000)


def test_scenario_trial_shares_projection():
    runs = scenario_trial(ScenarioSpec(name="gradual_drift", T=12), 0, 0)
    assert [r.regime for r in runs] == ["illum_change", "cam_shake"]
    np.testing.assert_array_equal(runs[0].codec.P, runs[1].codec.P)
    again = scenario_trial(ScenarioSpec(name="gradual_drift", T=12), 0, 0)
    np.testing.assert_array_equal(runs[1].latents, again[1].latents)
    other = scenario_trial(ScenarioSpec(name="gradual_drift", T=12), 0, 1)
    assert not np.array_equal(runs[1].latents, other[1].latents)


def test_frame_export_roundtrip(tmp_path):
    f = frames("cam_shake", T=5)
    export_frames(f, tmp_path / "f.bin", regime="cam_shake")
    back = load_frames(tmp_path / "f.bin")
    np.testing.assert_array_equal(back, f.astype(np.float32))


def test_latents_csv(tmp_path):
    z = np.random.default_rng(0).standard_normal((4, 6))
    path = tmp_path / "z.csv"
    np.savetxt(path, z, delimiter=",")
    np.testing.assert_allclose(load_latents_csv(path, d=6), z / np.linalg.norm(z, axis=1, keepdims=True))
    with pytest.raises(InvalidDims):
        load_latents_csv(path, d=5)
