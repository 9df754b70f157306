"""File formats: law families, run series, fit reports, schedules, curves.

JSON output goes through :func:`dumps`, which writes every float with 17
significant digits so payloads are byte-for-byte reproducible.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .lawcore import COST_UNITS, LawFamily, PowerLaw
from .lawfit import FitReport, RunSeries
from .traverse import ErrorPartition, Schedule, Segment, Transition


class FormatError(ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


def _format_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    text = format(x, ".17g")
    if not any(ch in text for ch in ".en"):
        text += ".0"
    return text


def dumps(obj: Any, indent: int = 2) -> str:
    """Deterministic JSON with fixed 17-significant-digit floats."""

    def enc(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, (bool, np.bool_)) or o is None:
            return json.dumps(bool(o) if o is not None else None)
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            return _format_float(float(o))
        if isinstance(o, str):
            return json.dumps(o)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(str(k))}: {enc(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, (list, tuple, np.ndarray)):
            if len(o) == 0:
                return "[]"
            if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in o):
                return "[" + ", ".join(enc(v, level + 1) for v in o) + "]"
            items = [pad + enc(v, level + 1) for v in o]
            return "[\n" + ",\n".join(items) + "\n" + end + "]"
        raise TypeError(f"cannot serialise {type(o).__name__}")

    return enc(obj, 0) + "\n"


def _strict_keys(obj, required, optional=(), where="object"):
    if not isinstance(obj, dict):
        raise FormatError(f"{where} must be a JSON object")
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise FormatError(f"unknown keys in {where}: {sorted(unknown)}")
    missing = set(required) - set(obj)
    if missing:
        raise FormatError(f"missing keys in {where}: {sorted(missing)}")


def _number(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise FormatError(f"{where} must be a number, got {v!r}")
    return float(v)


# law families


def family_to_dict(family: LawFamily) -> dict:
    order = family.shape_order or family.labels
    return {
        "cost_unit": family.cost_unit,
        "shape_parameter": family.shape_parameter,
        "laws": [
            {"shape": law.shape_label, "a": law.a, "b": law.b, "c": law.c, "d": law.d}
            for law in sorted(family.laws, key=lambda law: order.index(law.shape_label))
        ],
    }


def family_from_dict(obj) -> LawFamily:
    """Family from its JSON object; the file order of laws becomes ``shape_order``."""
    _strict_keys(obj, ("cost_unit", "shape_parameter", "laws"), where="law family")
    unit = obj["cost_unit"]
    if unit not in COST_UNITS:
        raise FormatError(f"unknown cost_unit {unit!r}")
    if not isinstance(obj["laws"], list) or not obj["laws"]:
        raise FormatError("'laws' must be a nonempty list")
    laws = []
    for i, entry in enumerate(obj["laws"]):
        _strict_keys(entry, ("shape", "a", "b", "c", "d"), where=f"laws[{i}]")
        try:
            laws.append(
                PowerLaw(
                    *(_number(entry[k], f"laws[{i}].{k}") for k in "abcd"),
                    shape_label=str(entry["shape"]),
                    cost_unit=unit,
                )
            )
        except FormatError:
            raise
        except ValueError as exc:
            raise FormatError(f"laws[{i}]: {exc}") from None
    try:
        return LawFamily.from_laws(laws, cost_unit=unit, shape_parameter=str(obj["shape_parameter"]))
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def _read_json(path):
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON in {path}: {exc.msg}", exc.lineno) from None


def load_family(path) -> LawFamily:
    return family_from_dict(_read_json(path))


def save_family(family: LawFamily, path) -> None:
    Path(path).write_text(dumps(family_to_dict(family)))


# run series


def series_from_csv(text: str, shape_label: str = "", cost_unit: str = "flops") -> RunSeries:
    rows = list(csv.reader(_io.StringIO(text)))
    if not rows or [h.strip() for h in rows[0]] != ["compute", "error"]:
        raise FormatError("expected header 'compute,error'", 1)
    compute, error = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 2:
            raise FormatError(f"expected 2 columns, got {len(row)}", lineno)
        try:
            c, e = float(row[0]), float(row[1])
        except ValueError:
            raise FormatError(f"non-numeric value in {row!r}", lineno) from None
        if not (math.isfinite(c) and c > 0 and math.isfinite(e) and e > 0):
            raise FormatError(f"compute and error must be positive, got {row!r}", lineno)
        compute.append(c)
        error.append(e)
    if not compute:
        raise FormatError("no data rows", len(rows) + 1)
    return RunSeries(compute, error, shape_label=shape_label, cost_unit=cost_unit)


def series_from_dict(obj) -> RunSeries:
    _strict_keys(obj, ("shape", "cost_unit", "points"), where="run series")
    pts = obj["points"]
    if not isinstance(pts, list) or not pts:
        raise FormatError("'points' must be a nonempty list")
    for i, p in enumerate(pts):
        if not (isinstance(p, list) and len(p) == 2):
            raise FormatError(f"points[{i}] must be [compute, error]")
        _number(p[0], f"points[{i}][0]")
        _number(p[1], f"points[{i}][1]")
    try:
        return RunSeries.from_points(pts, shape_label=str(obj["shape"]), cost_unit=obj["cost_unit"])
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def series_to_dict(series: RunSeries) -> dict:
    return {"shape": series.shape_label, "cost_unit": series.cost_unit, "points": [list(p) for p in series.points]}


def series_to_csv(series: RunSeries) -> str:
    lines = ["compute,error"]
    lines += [f"{_format_float(c)},{_format_float(e)}" for c, e in series.points]
    return "\n".join(lines) + "\n"


def load_series(path, cost_unit: str = "flops") -> RunSeries:
    """Read a ``.csv`` (label = file stem) or ``.json`` run series."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        return series_from_dict(_read_json(path))
    return series_from_csv(path.read_text(), shape_label=path.stem, cost_unit=cost_unit)


def fit_report_to_dict(report: FitReport) -> dict:
    law = report.law
    return {
        "shape": law.shape_label,
        "cost_unit": law.cost_unit,
        "params": {"a": law.a, "b": law.b, "c": law.c, "d": law.d},
        "objective": report.objective,
        "rmse": report.rmse,
        "n_points": report.n_points,
        "compute_scale": report.scale,
        "boundary": list(report.boundary),
        "starts": [
            {
                "start": list(s.start),
                "params": list(s.params) if s.params is not None else None,
                "objective": s.objective,
                "iterations": s.iterations,
                "converged": s.converged,
            }
            for s in report.starts
        ],
    }


# partitions and schedules


def partition_to_dict(part: ErrorPartition) -> dict:
    return {
        "e_start": part.e_start,
        "e_end": part.e_end,
        "segments": [{"e_high": s.e_high, "e_low": s.e_low, "shape": s.shape} for s in part.segments],
    }


def partition_from_dict(obj) -> ErrorPartition:
    _strict_keys(obj, ("segments",), ("e_start", "e_end"), where="partition")
    segs = []
    for i, s in enumerate(obj["segments"]):
        _strict_keys(s, ("e_high", "e_low", "shape"), where=f"segments[{i}]")
        segs.append(Segment(_number(s["e_high"], "e_high"), _number(s["e_low"], "e_low"), str(s["shape"])))
    try:
        return ErrorPartition(tuple(segs))
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def schedule_to_dict(schedule: Schedule) -> dict:
    return {
        "kind": schedule.kind,
        "initial": schedule.initial,
        "transitions": [
            {"shape": t.shape, "trigger_type": t.trigger_type, "value": t.value} for t in schedule.transitions
        ],
    }


def schedule_from_dict(obj) -> Schedule:
    _strict_keys(obj, ("kind", "initial", "transitions"), where="schedule")
    trans = []
    for i, t in enumerate(obj["transitions"]):
        _strict_keys(t, ("shape", "trigger_type", "value"), where=f"transitions[{i}]")
        trans.append(Transition(str(t["shape"]), t["trigger_type"], _number(t["value"], "value")))
    try:
        return Schedule(obj["kind"], str(obj["initial"]), tuple(trans))
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def load_schedule(path) -> Schedule:
    obj = _read_json(path)
    # accept the full output of the schedule command as well
    if isinstance(obj, dict) and "schedule" in obj:
        obj = obj["schedule"]
    return schedule_from_dict(obj)


# curves


def rows_to_csv(rows: Iterable[tuple[float, float, str]]) -> str:
    lines = ["compute,error,shape"]
    lines += [f"{_format_float(c)},{_format_float(e)},{s}" for c, e, s in rows]
    return "\n".join(lines) + "\n"


def trajectory_to_dict(traj) -> dict:
    return {
        "reached": traj.reached,
        "samples": [{"compute": c, "error": e, "shape": s} for c, e, s in traj.rows()],
        "transitions": [
            {
                "compute": m.compute,
                "error_before": m.error_before,
                "error_after": m.error_after,
                "from": m.shape_from,
                "to": m.shape_to,
            }
            for m in traj.transitions
        ],
    }


def frontier_to_dict(front) -> dict:
    return {
        "points": [
            {
                "compute": s.compute,
                "static_error": s.error,
                "static_shape": s.shape,
                "static_model": s.model,
                "scheduled_error": g.error,
                "scheduled_shape": g.shape,
                "scheduled_model": g.model,
            }
            for s, g in zip(front.static, front.scheduled)
        ]
    }


def frontier_to_csv(front) -> str:
    lines = ["compute,static_error,static_shape,scheduled_error,scheduled_shape"]
    for s, g in zip(front.static, front.scheduled):
        lines.append(
            f"{_format_float(s.compute)},{_format_float(s.error)},{s.shape},{_format_float(g.error)},{g.shape}"
        )
    return "\n".join(lines) + "\n"
