"""Monte Carlo checks of the threshold tradeoff and the drift refresh bound."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np

from . import memory
from .calibrate import SweepCurve, optimal_tau
from .errors import ConditionViolation, Infeasible, InfeasibleSeparation
from .memory import MemoryStore
from .metrics import mean_ci
from .protocol import Decision, SessionConfig, frame_bits, run_session, tx_decide
from .rng import derive_int, derive_rng
from .scenarios import generate_separated_prototypes, sample_drift


@dataclass(frozen=True)
class TheoremParams:
    M: int = 8
    d: int = 48
    delta: float = 1.0
    epsilon: float = 0.15
    beta: float = 8.0
    tau: float = 0.8
    T: int = 100
    trials: int = 100
    master_seed: int = 0
    slack_c: float = 10.0
    distribution: str = "uniform_ball"
    sigma: Optional[float] = None
    bits_per_dim: int = 8

    @property
    def boundary(self) -> float:
        """Upper limit on tau for the drift analysis to apply."""
        return 1.0 - self.epsilon - self.epsilon ** 2 / 2.0

    @property
    def predicted_factor(self) -> float:
        return 1.0 - self.beta * self.epsilon ** 2 / (2.0 * self.d)

    def replace(self, **changes) -> "TheoremParams":
        from dataclasses import replace
        return replace(self, **changes)


def validate(params: TheoremParams) -> None:
    """Raise ConditionViolation naming the first broken precondition."""
    p = params
    if p.M < 1 or p.d < 1 or p.T < 1 or p.trials < 1:
        raise ConditionViolation("setup", "M, d, T and trials must be positive")
    if not 0 < p.delta <= 2:
        raise ConditionViolation("condition 1 (minimum separation)", f"delta={p.delta} must lie in (0, 2]")
    if not 0 <= p.epsilon < 1:
        raise ConditionViolation("condition 2 (bounded zero-mean drift)", f"epsilon={p.epsilon} must lie in [0, 1)")
    if p.distribution == "gaussian" and (p.sigma is None or p.sigma > p.epsilon):
        raise ConditionViolation("condition 2 (bounded zero-mean drift)", "sigma must not exceed epsilon")
    if not 0 < p.tau < p.boundary:
        raise ConditionViolation(
            "condition 3 (boundary regime)",
            f"tau={p.tau} must satisfy 0 < tau < 1 - eps - eps^2/2 = {p.boundary:.6f}")
    if not p.beta > 0:
        raise ConditionViolation("setup", "beta must be positive")


@dataclass
class TrialSetup:
    store: MemoryStore
    mu_index: int
    deltas: np.ndarray

    @property
    def latents(self) -> np.ndarray:
        return self.store.prototypes[self.mu_index] + self.deltas


def trial_setup(params: TheoremParams, trial: int) -> TrialSetup:
    """Separated prototypes, the drift centre and the drift draws for one trial."""
    p = params
    try:
        protos = generate_separated_prototypes(p.M, p.d, p.delta, derive_int(p.master_seed, "protos", trial))
    except InfeasibleSeparation as exc:
        raise ConditionViolation("condition 1 (minimum separation)", str(exc)) from exc
    rng = derive_rng(p.master_seed, "drift", trial)
    mu_index = int(rng.integers(p.M))
    if p.epsilon == 0:
        deltas = np.zeros((p.T, p.d))
    else:
        deltas = sample_drift(rng, p.T, p.d, p.epsilon, p.distribution, p.sigma)
    return TrialSetup(MemoryStore.from_vectors(protos), mu_index, deltas)


def drift_decisions(setup: TrialSetup, params: TheoremParams, method: str,
                    raw: bool = False) -> list[Decision]:
    """Decisions on unnormalized drifted queries against a fixed, full store."""
    return [tx_decide(z, setup.store, params.tau, method, params.beta, raw) for z in setup.latents]


@dataclass(frozen=True)
class Estimate:
    mean: float
    half_width: float
    values: tuple = field(repr=False, default=())

    def to_dict(self) -> dict:
        return {"mean": self.mean, "ci95_half_width": self.half_width, "trials": len(self.values)}


def _trial_counts(params: TheoremParams, raw_hopfield: bool = False):
    """Per-trial (misses_H, misses_V, bits_H, bits_V) on paired drift draws."""
    b_new = params.bits_per_dim * params.d
    out = []
    for k in range(params.trials):
        setup = trial_setup(params, k)
        row = []
        for method in ("hopfield", "vq"):
            decs = drift_decisions(setup, params, method, raw_hopfield and method == "hopfield")
            misses = sum(not d.hit for d in decs)
            bits = sum(frame_bits(d, params.M, b_new) for d in decs)
            row.append((misses, bits))
        out.append((row[0][0], row[1][0], row[0][1], row[1][1]))
    return np.array(out, dtype=np.float64)


def estimate_refresh(method: str, params: TheoremParams, guarded: bool = True,
                     raw_hopfield: bool = False) -> Estimate:
    """Mean refresh count over the horizon with a 95% normal-approximation CI.

    ``guarded=False`` skips the precondition check (degenerate-threshold tests).
    """
    if guarded:
        validate(params)
    counts = _trial_counts(params, raw_hopfield)
    col = counts[:, 0 if method == "hopfield" else 1]
    m, hw = mean_ci(col)
    return Estimate(m, hw, tuple(col.tolist()))


@dataclass
class TheoremReport:
    name: str
    params: dict
    values: dict
    satisfied: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "params": self.params, "values": self.values,
                "satisfied": self.satisfied}


def check_theorem2(params: TheoremParams, raw_hopfield: bool = False) -> TheoremReport:
    """Compare Hopfield and VQ refresh counts against the predicted reduction factor."""
    validate(params)
    counts = _trial_counts(params, raw_hopfield)
    h_mean, h_hw = mean_ci(counts[:, 0])
    v_mean, v_hw = mean_ci(counts[:, 1])
    factor = params.predicted_factor
    eps3 = params.slack_c * params.epsilon ** 3 * params.T
    slack = eps3 + h_hw + v_hw
    rhs = v_mean * factor + slack
    values = {
        "mean_refresh_H": h_mean, "ci_H": h_hw,
        "mean_refresh_V": v_mean, "ci_V": v_hw,
        "predicted_factor": factor,
        "slack": slack, "slack_eps3": eps3,
        "rhs": rhs, "margin": rhs - h_mean,
        "raw_hopfield": raw_hopfield,
    }
    return TheoremReport("theorem2", asdict(params), values, bool(h_mean <= rhs))


def check_corollary(params: TheoremParams, b_new: Optional[float] = None,
                    b_id_bar: Optional[float] = None) -> TheoremReport:
    """Paired bit savings of Hopfield over VQ against the refresh-based lower bound."""
    validate(params)
    b_new = params.bits_per_dim * params.d if b_new is None else b_new
    b_id_bar = math.log2(params.M) if b_id_bar is None else b_id_bar
    counts = _trial_counts(params)
    v_mean, _ = mean_ci(counts[:, 1])
    savings, s_hw = mean_ci(counts[:, 3] - counts[:, 2])
    per_refresh = b_new - b_id_bar
    bound = per_refresh * params.beta * params.epsilon ** 2 / (2.0 * params.d) * v_mean
    slack = per_refresh * params.slack_c * params.epsilon ** 3 * params.T + s_hw
    values = {
        "mean_savings": savings, "ci_savings": s_hw,
        "lower_bound": bound, "slack": slack,
        "mean_refresh_V": v_mean, "b_new": b_new, "b_id_bar": b_id_bar,
        "margin": savings - (bound - slack),
    }
    return TheoremReport("corollary1", asdict(params), values, bool(savings >= bound - slack))


def single_refresh_trace(d: int = 48, M: int = 8, beta: float = 8.0, seed: int = 0) -> dict:
    """One frame that VQ refreshes and Hopfield reuses, run through full sessions.

    Both sessions start from the same full memory; returns the bit totals.
    """
    protos = generate_separated_prototypes(M, d, 1.0, seed)
    store = MemoryStore.from_vectors(protos)
    rng = derive_rng(seed, "single-refresh")
    delta = sample_drift(rng, 1, d, 0.6)[0]
    z = protos[0] + delta
    z /= np.linalg.norm(z)
    _, s_raw = memory.best_match(z, store)
    z_tilde = memory.hopfield_retrieve(z, store, beta)
    s_hop = float(z_tilde @ protos[0])
    if not s_hop > s_raw:
        raise RuntimeError("constructed query does not separate the methods")
    tau = (s_raw + s_hop) / 2.0
    logs = {}
    for method in ("hopfield", "vq"):
        cfg = SessionConfig(d=d, tau=tau, beta=beta, M_max=M, method=method)
        logs[method] = run_session([z], cfg, tx_store=store)
    return {
        "tau": tau, "s_raw": s_raw, "s_hopfield": s_hop,
        "bits_hopfield": logs["hopfield"].B_sem, "bits_vq": logs["vq"].B_sem,
        "delta_bits": logs["vq"].B_sem - logs["hopfield"].B_sem,
        "refresh_hopfield": logs["hopfield"].refreshes, "refresh_vq": logs["vq"].refreshes,
    }


@dataclass
class CurveCheck:
    ok: bool
    violations: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": self.violations}


_SE = {"hit_rate": "hit_rate_se", "C_R": "C_R_se", "mse": "mse_se"}


def check_monotonicity(curve: SweepCurve, z: float = 1.96, min_points: int = 5,
                       min_trials: int = 30) -> CurveCheck:
    """Hit rate, capacity and distortion must not rise with tau beyond CI noise.

    Violations are reported as (metric, tau_i, tau_j, increase, tolerance).
    """
    if len(curve.points) < min_points:
        raise ValueError(f"need at least {min_points} sweep points")
    if any(p.trials < min_trials for p in curve.points):
        raise ValueError(f"need at least {min_trials} trials per point")
    violations = []
    for metric, se_name in _SE.items():
        vals = curve.column(metric)
        ses = curve.column(se_name)
        for i in range(len(vals) - 1):
            rise = vals[i + 1] - vals[i]
            tol = z * math.hypot(ses[i], ses[i + 1]) + 1e-12
            if rise > tol:
                violations.append((metric, curve.points[i].tau, curve.points[i + 1].tau,
                                   float(rise), float(tol)))
    return CurveCheck(not violations, violations)


def check_pareto(curve: SweepCurve, z: float = 1.96) -> CurveCheck:
    """No operating point may beat another on both distortion and capacity.

    A pair counts as dominated only when the dominating point is no worse on
    both axes and better on one by more than the CI tolerance. Reported pairs
    are (tau_dominating, tau_dominated).
    """
    pts = curve.points
    dominated = []
    for i, a in enumerate(pts):
        for j, b in enumerate(pts):
            if i == j:
                continue
            tol_d = z * math.hypot(a.mse_se, b.mse_se) + 1e-12
            tol_c = z * math.hypot(a.C_R_se, b.C_R_se) + 1e-12
            no_worse = a.mse <= b.mse and a.C_R >= b.C_R
            strictly = a.mse < b.mse - tol_d or a.C_R > b.C_R + tol_c
            if no_worse and strictly:
                dominated.append((a.tau, b.tau))
    return CurveCheck(not dominated, dominated)


def check_optimal_tau_order(curve: SweepCurve, n_targets: int = 25) -> CurveCheck:
    """tau*(D0) must be non-increasing in D0 over a grid of feasible targets."""
    mses = curve.column("mse")
    targets = np.linspace(mses.min(), mses.max(), n_targets)
    prev = math.inf
    violations = []
    for d0 in targets:
        try:
            t = optimal_tau(curve, float(d0))
        except Infeasible:
            continue
        if t > prev:
            violations.append((float(d0), t, prev))
        prev = t
    return CurveCheck(not violations, violations)


def check_theorem1(curve: SweepCurve, z: float = 1.96) -> TheoremReport:
    mono = check_monotonicity(curve, z)
    pareto = check_pareto(curve, z)
    order = check_optimal_tau_order(curve)
    values = {
        "method": curve.method, "scenario": curve.scenario,
        "monotonicity": mono.to_dict(), "pareto": pareto.to_dict(),
        "optimal_tau_order": order.to_dict(),
        "taus": curve.taus,
        "hit_rate": curve.column("hit_rate").tolist(),
        "C_R": curve.column("C_R").tolist(),
        "mse": curve.column("mse").tolist(),
    }
    return TheoremReport("theorem1", {"trials": curve.points[0].trials}, values,
                         mono.ok and pareto.ok and order.ok)


@dataclass(frozen=True)
class BoostStats:
    epsilon: float
    mean_abs_residual: float
    mean_residual: float
    max_abs_residual: float
    mean_similarity: float
    n: int


def boost_residuals(deltas: np.ndarray, store: MemoryStore, mu_index: int, beta: float) -> np.ndarray:
    """Measured post-retrieval similarity minus the quadratic boost prediction."""
    mu = store.prototypes[mu_index]
    d = store.d
    out = np.empty(len(deltas))
    for k, delta in enumerate(deltas):
        z_tilde = memory.hopfield_retrieve(mu + delta, store, beta)
        predicted = 1.0 + delta @ mu + beta / (2.0 * d) * (delta @ delta)
        out[k] = z_tilde @ mu - predicted
    return out


def measure_boost(deltas: np.ndarray, store: MemoryStore, mu_index: int, beta: float,
                  epsilon: float = float("nan")) -> BoostStats:
    r = boost_residuals(deltas, store, mu_index, beta)
    mu = store.prototypes[mu_index]
    sims = [memory.hopfield_retrieve(mu + dlt, store, beta) @ mu for dlt in deltas[: min(len(deltas), 256)]]
    return BoostStats(epsilon, float(np.mean(np.abs(r))), float(np.mean(r)),
                      float(np.max(np.abs(r))), float(np.mean(sims)), len(r))


def boost_scaling(params: TheoremParams, epsilons: Sequence[float] = (0.02, 0.04, 0.08),
                  samples: int = 10_000) -> dict:
    """Log-log slope of the mean absolute boost residual against epsilon."""
    protos = generate_separated_prototypes(params.M, params.d, params.delta,
                                           derive_int(params.master_seed, "boost-protos"))
    store = MemoryStore.from_vectors(protos)
    stats = []
    for eps in epsilons:
        rng = derive_rng(params.master_seed, "boost", repr(float(eps)))
        deltas = sample_drift(rng, samples, params.d, eps)
        stats.append(measure_boost(deltas, store, 0, params.beta, eps))
    x = np.log([s.epsilon for s in stats])
    y = np.log([s.mean_abs_residual for s in stats])
    slope = float(np.polyfit(x, y, 1)[0])
    return {"slope": slope, "stats": [asdict(s) for s in stats], "beta": params.beta,
            "M": params.M, "d": params.d}
