"""Acceptance criteria AC1-AC8. Each test prints one PASS/FAIL line."""
import time

import numpy as np
import pytest

from memsc import theory
from memsc.calibrate import DEFAULT_GRID, calibrate_matched_quality, sweep_tau
from memsc.corruption import CorruptionConfig, verify_cue
from memsc.protocol import SessionConfig
from memsc.robustness import robustness_grid
from memsc.scenarios import ScenarioSpec

BASE = SessionConfig(d=48, bits_new_per_dim=8, M_max=8)


@pytest.fixture
def report(capsys):
    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\n{name} {'PASS' if ok else 'FAIL'}: {detail}")
    return emit


def _hit_rate(curve, tau):
    return curve.points[curve.taus.index(tau)].hit_rate


def test_ac1_gradual_drift_savings(report):
    t0 = time.perf_counter()
    pair = calibrate_matched_quality(ScenarioSpec(name="gradual_drift", T=64), BASE, 0.2,
                                     DEFAULT_GRID, trials=20)
    elapsed = time.perf_counter() - t0
    h_curve, v_curve = pair.curves
    hit_h, hit_v = _hit_rate(h_curve, pair.tau_a), _hit_rate(v_curve, pair.tau_b)
    ratio = pair.bits_a / pair.bits_b
    ok = ratio <= 0.5 and hit_h - hit_v >= 0.2 and elapsed <= 60
    report("AC1", ok, f"tau_H={pair.tau_a:.3f} tau_V={pair.tau_b:.3f} bits H/V={pair.bits_a:.3f}/"
                      f"{pair.bits_b:.3f} ratio={ratio:.3f} (<=0.5) hit H-V={hit_h - hit_v:.3f} "
                      f"(>=0.2) time={elapsed:.1f}s")
    assert ok


def test_ac2_stable_parity(report):
    t0 = time.perf_counter()
    pair = calibrate_matched_quality(ScenarioSpec(name="stable", T=64), BASE, 0.2, DEFAULT_GRID,
                                     trials=20)
    elapsed = time.perf_counter() - t0
    hit_h, hit_v = _hit_rate(pair.curves[0], pair.tau_a), _hit_rate(pair.curves[1], pair.tau_b)
    gap = abs(pair.bits_a - pair.bits_b)
    ok = gap <= 1.0 and min(hit_h, hit_v) >= 0.95 and elapsed <= 30
    report("AC2", ok, f"bits H/V={pair.bits_a:.3f}/{pair.bits_b:.3f} gap={gap:.3f} (<=1.0) "
                      f"hit H/V={hit_h:.3f}/{hit_v:.3f} (>=0.95) time={elapsed:.1f}s")
    assert ok


THEOREM_SETS = [theory.TheoremParams(M=8, d=48, delta=1.0, epsilon=0.15, beta=b, tau=0.8, T=100,
                                     trials=100) for b in (4.0, 8.0, 16.0)]


def test_ac3_refresh_bound(report):
    t0 = time.perf_counter()
    reps = [theory.check_theorem2(p) for p in THEOREM_SETS]
    elapsed = time.perf_counter() - t0
    ok = all(r.satisfied for r in reps) and elapsed <= 120
    parts = [f"beta={r.params['beta']:g}: H={r.values['mean_refresh_H']:.2f} "
             f"V={r.values['mean_refresh_V']:.2f} rhs={r.values['rhs']:.2f}" for r in reps]
    report("AC3", ok, "; ".join(parts) + f" time={elapsed:.1f}s")
    assert ok


def test_ac4_corollary_and_trace(report):
    reps = [theory.check_corollary(p) for p in THEOREM_SETS]
    trace = theory.single_refresh_trace(d=48, M=8)
    ok = all(r.satisfied for r in reps) and trace["delta_bits"] == 381
    parts = [f"beta={r.params['beta']:g}: savings={r.values['mean_savings']:.1f} "
             f">= {r.values['lower_bound']:.2f}-{r.values['slack']:.1f}" for r in reps]
    report("AC4", ok, "; ".join(parts) + f"; single-refresh delta={trace['delta_bits']} bits")
    assert ok


def test_ac5_monotonicity(report):
    t0 = time.perf_counter()
    results = []
    for scenario in ("stable", "gradual_drift"):
        for method in ("hopfield", "vq"):
            curve = sweep_tau(DEFAULT_GRID, ScenarioSpec(name=scenario, T=64),
                              BASE.replace(method=method), trials=30)
            mono = theory.check_monotonicity(curve)
            par = theory.check_pareto(curve)
            results.append((scenario, method, mono, par))
    elapsed = time.perf_counter() - t0
    ok = all(m.ok and p.ok for *_, m, p in results) and elapsed <= 90
    parts = [f"{s}/{m}: mono_viol={len(mo.violations)} dominated={len(pa.violations)}"
             for s, m, mo, pa in results]
    report("AC5", ok, "; ".join(parts) + f" time={elapsed:.1f}s")
    assert ok


def test_ac6_boost_cubic_remainder(report):
    out = theory.boost_scaling(theory.TheoremParams(M=8, d=48, delta=1.0, beta=8.0),
                               (0.02, 0.04, 0.08), samples=10_000)
    slope = out["slope"]
    ok = 2.5 <= slope <= 3.5
    resid = ", ".join(f"eps={s['epsilon']}: {s['mean_abs_residual']:.3e}" for s in out["stats"])
    report("AC6", ok, f"log-log slope={slope:.3f} (target [2.5, 3.5]); mean|r| {resid}")
    assert ok


def test_ac7_robustness_grid(report):
    cfg = CorruptionConfig()
    base = np.zeros(32, dtype=bool)
    flip8, flip9 = base.copy(), base.copy()
    flip8[:8] = True
    flip9[:9] = True
    boundary = verify_cue(flip8, base, cfg.tolerance) and not verify_cue(flip9, base, cfg.tolerance)

    rows = robustness_grid(ScenarioSpec(name="gradual_drift", T=64), BASE.replace(tau=0.8), trials=10)
    zero_rows = [r for r in rows if r.level == 0.0]
    identical = all(r.trial_bits == r.baseline_trial_bits for r in zero_rows)
    by = {(r.mode, r.level, r.method): r for r in rows}
    mild = [(m, lvl) for m, lvl in (("id_desync", 0.0), ("id_desync", 0.1),
                                   ("vec_perturb", 0.0), ("vec_perturb", 0.05))]
    mild_ok = all(
        all(h <= v for h, v in zip(by[(m, l, "hopfield")].trial_refreshes,
                                   by[(m, l, "vq")].trial_refreshes))
        for m, l in mild)
    severe = "; ".join(f"sigma={l:g} refresh H/V={by[('vec_perturb', l, 'hopfield')].refresh_count:.1f}/"
                       f"{by[('vec_perturb', l, 'vq')].refresh_count:.1f}" for l in (0.10, 0.20))
    ok = boundary and identical and mild_ok and len(rows) == 16
    report("AC7", ok, f"cue 8/32 accept, 9/32 reject={boundary}; zero-level rows == baseline "
                      f"{identical}; mild H<=V paired={mild_ok}; severe (reported) {severe}")
    assert ok


def test_ac8_property_suites(report):
    import test_properties as props

    names = ["test_softmax_weights_sum_to_one", "test_retrieval_is_unit_norm",
             "test_bit_decomposition_on_every_frame", "test_index_entropy_bounds",
             "test_session_is_deterministic", "test_stores_stay_in_sync_without_corruption"]
    failed = []
    for name in names:
        fn = getattr(props, name)
        assert fn.hypothesis.inner_test is not None
        assert fn._hypothesis_internal_use_settings.max_examples >= 1000
        try:
            fn()
        except Exception as exc:  # noqa: BLE001
            failed.append(f"{name}: {type(exc).__name__}")
    ok = not failed
    report("AC8", ok, f"{len(names) - len(failed)}/{len(names)} properties held over 1000 cases each"
                      + (f"; failed {failed}" if failed else ""))
    assert ok
