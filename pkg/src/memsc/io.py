"""CSV and JSON writers with round-trip float formatting."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .calibrate import SweepCurve
from .protocol import CSV_FIELDS, SessionLog

SCHEMA_VERSION = 1

SWEEP_FIELDS = ("tau", "method", "hit_rate", "bits_per_frame", "mse", "psnr", "C_R", "trials",
                "stream_hash")


def fmt(value) -> str:
    """Round-trip text for a CSV cell; ``None`` becomes an empty cell."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(value)


def write_csv(path, fields: Sequence[str], rows: Iterable[dict]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for row in rows:
            w.writerow([fmt(row.get(f)) for f in fields])
    return path


def read_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def session_rows(log: SessionLog) -> list[dict]:
    return [{f: getattr(r, f) for f in CSV_FIELDS} for r in log.records]


def write_session_csv(path, log: SessionLog) -> Path:
    return write_csv(path, CSV_FIELDS, session_rows(log))


def sweep_rows(curve: SweepCurve) -> list[dict]:
    return [{"tau": p.tau, "method": curve.method, "hit_rate": p.hit_rate,
             "bits_per_frame": p.bits_per_frame, "mse": p.mse, "psnr": p.psnr, "C_R": p.C_R,
             "trials": p.trials, "stream_hash": curve.stream_hash} for p in curve.points]


def write_sweep_csv(path, curves: Sequence[SweepCurve]) -> Path:
    rows = [r for c in curves for r in sweep_rows(c)]
    return write_csv(path, SWEEP_FIELDS, rows)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))
    return path
