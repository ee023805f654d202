"""Command-line entry point.

Usage: memsc {run,sweep,robustness,theory,calibrate} [--config PATH] [--seed N]
       [--jobs N] [--set section.key=value ...] [--out DIR]
"""
from __future__ import annotations

import argparse
import copy
import dataclasses
import hashlib
import json
import sys
import time
from pathlib import Path
from typing import Optional

from . import __version__, io, theory
from .calibrate import DEFAULT_GRID, calibrate_matched_quality, sweep_tau
from .corruption import CorruptionConfig
from .errors import ConditionViolation, ConfigError, MemscError
from .metrics import raw_bits_per_frame, summarize
from .protocol import SessionConfig, run_session
from .robustness import DEFAULT_LEVELS, GRID_FIELDS, robustness_grid
from .scenarios import ScenarioSpec, scenario_trial

DEFAULTS = {
    "scenario": {"name": "stable", "T": 64, "H": 32, "W": 32, "C": 3, "regimes": None,
                 "overrides": {}},
    "session": {},
    "methods": ["hopfield", "vq"],
    "sweep": {"tau_grid": list(DEFAULT_GRID), "trials": 30},
    "robustness": {"trials": 5, "levels": {k: list(v) for k, v in DEFAULT_LEVELS.items()},
                   "cue": {}},
    "theory": {"params": {}, "sweep_trials": 30, "boost": True},
    "calibrate": {"band_db": 0.2, "trials": 20, "D0": None},
}


def _merge(base: dict, extra: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        key = f"{prefix}{k}"
        if k not in out:
            raise ConfigError(key, "unknown configuration key")
        if isinstance(out[k], dict) and isinstance(v, dict) and k not in ("session", "params",
                                                                            "overrides", "cue"):
            out[k] = _merge(out[k], v, key + ".")
        else:
            out[k] = v
    return out


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(cfg: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError(assignment, "override must look like key=value")
    key, text = assignment.split("=", 1)
    parts = key.strip().split(".")
    node = cfg
    for p in parts[:-1]:
        if not isinstance(node.get(p), dict):
            raise ConfigError(key, "unknown configuration section")
        node = node[p]
    leaf = parts[-1]
    free = node is cfg["session"] or node is cfg["theory"]["params"] or node is cfg["robustness"]["cue"]
    if leaf not in node and not free:
        raise ConfigError(key, "unknown configuration key")
    node[leaf] = _parse_value(text)


def load_config(path: Optional[str], overrides=()) -> dict:
    user = {}
    if path:
        try:
            user = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError("--config", f"invalid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("--config", "top level must be an object")
    cfg = _merge(DEFAULTS, user)
    for item in overrides:
        apply_override(cfg, item)
    return cfg


def _build(cls, values: dict, section: str):
    names = {f.name for f in dataclasses.fields(cls)}
    for k in values:
        if k not in names:
            raise ConfigError(f"{section}.{k}", "unknown configuration key")
    try:
        return cls(**values)
    except ConfigError as exc:
        raise ConfigError(f"{section}.{exc.field}", str(exc).split(": ", 1)[-1]) from exc
    except TypeError as exc:
        raise ConfigError(section, str(exc)) from exc


def scenario_spec(cfg: dict) -> ScenarioSpec:
    sc = dict(cfg["scenario"])
    if sc.get("regimes") is not None:
        sc["regimes"] = tuple(sc["regimes"])
    d = cfg["session"].get("d", 48)
    spec = _build(ScenarioSpec, {**sc, "d": d}, "scenario")
    try:
        spec.regime_list()
    except MemscError as exc:
        raise ConfigError("scenario.name", str(exc)) from exc
    return spec


def session_config(cfg: dict, seed: int) -> SessionConfig:
    values = dict(cfg["session"])
    if "robustness" in values:
        raise ConfigError("session.robustness", "use the robustness section")
    values["master_seed"] = seed
    return _build(SessionConfig, values, "session")


def _methods(cfg: dict) -> list:
    methods = cfg["methods"]
    for m in methods:
        if m not in ("hopfield", "vq"):
            raise ConfigError("methods", f"unknown method {m!r}")
    return list(methods)


def _run_dir(out: str, command: str, cfg: dict, seed: int) -> Path:
    digest = hashlib.sha256(io.dumps(cfg).encode()).hexdigest()[:10]
    path = Path(out) / f"{command}-s{seed}-{digest}"
    path.mkdir(parents=True, exist_ok=True)
    return path


def _manifest(run_dir: Path, command: str, cfg: dict, seed: int, outputs, started: float) -> None:
    io.write_json(run_dir / "manifest.json", {
        "schema_version": io.SCHEMA_VERSION,
        "tool": "memsc",
        "version": __version__,
        "command": command,
        "master_seed": seed,
        "config": cfg,
        "started": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(started)),
        "finished": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "outputs": sorted(str(Path(p).relative_to(run_dir)) for p in outputs),
    })


def cmd_run(cfg: dict, seed: int, jobs: int, run_dir: Path) -> list:
    spec = scenario_spec(cfg)
    base = session_config(cfg, seed)
    runs = scenario_trial(spec, seed, 0)
    raw = raw_bits_per_frame(spec.H, spec.W, spec.C)
    outputs, summary = [], {"sessions": {}, "pooled": {}}
    for method in _methods(cfg):
        config = base.replace(method=method)
        logs = []
        for r in runs:
            log = run_session(r.latents, config, frames=r.frames, codec=r.codec)
            logs.append(log)
            outputs.append(io.write_session_csv(run_dir / "frames" / f"{r.regime}__{method}.csv", log))
            summary["sessions"][f"{r.regime}__{method}"] = {
                **log.aggregates(), **summarize([log], raw, config.omega).to_dict()}
        summary["pooled"][method] = summarize(logs, raw, config.omega).to_dict()
    summary["regimes"] = [r.regime for r in runs]
    outputs.append(io.write_json(run_dir / "summary.json", summary))
    return outputs


def _sweep_curves(cfg: dict, seed: int, jobs: int, trials=None, spec=None):
    spec = spec or scenario_spec(cfg)
    base = session_config(cfg, seed)
    sw = cfg["sweep"]
    trials = trials or int(sw["trials"])
    try:
        return [sweep_tau(sw["tau_grid"], spec, base.replace(method=m), trials, seed, jobs)
                for m in _methods(cfg)]
    except ValueError as exc:
        if isinstance(exc, MemscError):
            raise
        raise ConfigError("sweep", str(exc)) from exc


def cmd_sweep(cfg: dict, seed: int, jobs: int, run_dir: Path) -> list:
    curves = _sweep_curves(cfg, seed, jobs)
    return [io.write_sweep_csv(run_dir / "sweep.csv", curves)]


def cmd_robustness(cfg: dict, seed: int, jobs: int, run_dir: Path) -> list:
    spec = scenario_spec(cfg)
    base = session_config(cfg, seed)
    rb = cfg["robustness"]
    cue = _build(CorruptionConfig, dict(rb["cue"]), "robustness.cue")
    levels = rb["levels"]
    for mode in levels:
        if mode not in DEFAULT_LEVELS:
            raise ConfigError("robustness.levels", f"unknown corruption mode {mode!r}")
        for lvl in levels[mode]:
            _build(CorruptionConfig, {"mode": mode, "level": lvl}, "robustness.levels")
    rows = robustness_grid(spec, base, int(rb["trials"]), seed, levels, _methods(cfg), cue)
    return [io.write_csv(run_dir / "robustness.csv", GRID_FIELDS, [r.row() for r in rows])]


def theorem_params(cfg: dict, seed: int) -> theory.TheoremParams:
    values = {"master_seed": seed, **cfg["theory"]["params"]}
    params = _build(theory.TheoremParams, values, "theory.params")
    theory.validate(params)
    return params


def cmd_theory(cfg: dict, seed: int, jobs: int, run_dir: Path) -> list:
    params = theorem_params(cfg, seed)
    th = cfg["theory"]
    if int(th["sweep_trials"]) < 30 or len(cfg["sweep"]["tau_grid"]) < 5:
        raise ConfigError("theory.sweep_trials", "monotonicity checks need >= 30 trials and >= 5 thresholds")
    curves = _sweep_curves(cfg, seed, jobs, trials=int(th["sweep_trials"]))
    t1 = {c.method: theory.check_theorem1(c).to_dict() for c in curves}
    reports = {
        "theorem1": {"name": "theorem1", "satisfied": all(r["satisfied"] for r in t1.values()),
                     "per_method": t1},
        "theorem2": theory.check_theorem2(params).to_dict(),
        "corollary1": theory.check_corollary(params).to_dict(),
    }
    reports["corollary1"]["single_refresh_trace"] = theory.single_refresh_trace(
        d=params.d, M=params.M, beta=params.beta, seed=seed)
    outputs = [io.write_json(run_dir / "theory" / f"{name}.json", rep) for name, rep in reports.items()]
    if th.get("boost", True):
        outputs.append(io.write_json(run_dir / "theory" / "boost.json", theory.boost_scaling(params)))
    rows = []
    for name, rep in reports.items():
        vals = rep.get("values", {})
        rows.append({"report": name, "satisfied": rep["satisfied"],
                     "margin": vals.get("margin"), "M": params.M, "d": params.d,
                     "delta": params.delta, "epsilon": params.epsilon, "beta": params.beta,
                     "tau": params.tau, "trials": params.trials})
    outputs.append(io.write_csv(run_dir / "theory" / "summary.csv",
                                ("report", "satisfied", "margin", "M", "d", "delta", "epsilon",
                                 "beta", "tau", "trials"), rows))
    return outputs


def cmd_calibrate(cfg: dict, seed: int, jobs: int, run_dir: Path) -> list:
    spec = scenario_spec(cfg)
    base = session_config(cfg, seed)
    cal = cfg["calibrate"]
    methods = tuple(_methods(cfg))
    if len(methods) != 2:
        raise ConfigError("methods", "calibration needs exactly two methods")
    pair = calibrate_matched_quality(spec, base, float(cal["band_db"]), cfg["sweep"]["tau_grid"],
                                     int(cal["trials"]), seed, cal["D0"], methods, jobs)
    outputs = [io.write_sweep_csv(run_dir / "sweep.csv", pair.curves)]
    outputs.append(io.write_json(run_dir / "summary.json", {
        "methods": list(pair.methods), "tau": [pair.tau_a, pair.tau_b],
        "psnr": [pair.psnr_a, pair.psnr_b], "bits_per_frame": [pair.bits_a, pair.bits_b],
        "psnr_gap": pair.psnr_gap, "band_db": cal["band_db"]}))
    return outputs


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "robustness": cmd_robustness,
            "theory": cmd_theory, "calibrate": cmd_calibrate}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="memsc", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON configuration file")
    ap.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes for trials")
    ap.add_argument("--set", dest="overrides", action="append", default=[],
                    metavar="KEY=VALUE", help="override a config value, e.g. session.tau=0.8")
    ap.add_argument("--out", default="out", help="output root directory")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.time()
    try:
        if args.seed < 0 or args.seed >= 2 ** 64:
            raise ConfigError("--seed", "must be an unsigned 64-bit integer")
        if args.jobs < 1:
            raise ConfigError("--jobs", "must be at least 1")
        cfg = load_config(args.config, args.overrides)
        if args.command == "theory":
            theorem_params(cfg, args.seed)
        run_dir = _run_dir(args.out, args.command, cfg, args.seed)
        outputs = COMMANDS[args.command](cfg, args.seed, args.jobs, run_dir)
        _manifest(run_dir, args.command, cfg, args.seed, outputs, started)
    except (ConfigError, ConditionViolation) as exc:
        print(f"memsc: configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime error
        print(f"memsc: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    print(run_dir)
    return 0


if __name__ == "__main__":
    sys.exit(main())
