"""Command-line interface.

Standard output carries only the JSON payload; diagnostics go to standard
error. Exit codes: 0 success, 1 domain error, 2 usage or input-format error.

Defaults can be overridden by a JSON file named in ``LAWTRAVERSE_CONFIG``,
shaped as ``{"<command>": {"<option_dest>": value}}``; flags win over it.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import io as lio
from .flopcost import HardwareRun, ViTShape, carbon, distill_step_flops, forward_flops, parse_shape, train_step_flops
from .lawcore import LawDomainError, LawFamily, evaluate, start_error
from .lawfit import FitConfig, FitFailure, InsufficientDataError, fit
from .svg import loglog_svg
from .trajectory import (
    UndefinedSavingsError,
    default_partition,
    frontier,
    simulate,
    static_compute,
    to_step_schedule,
)
from .traverse import EmptyDomainError, baseline_schedule, greedy_schedule

log = logging.getLogger("lawtraverse")

CONFIG_ENV = "LAWTRAVERSE_CONFIG"


class UsageError(Exception):
    pass


def _emit(payload) -> None:
    sys.stdout.write(lio.dumps(payload))


def _parse_steps_map(text: str) -> dict[str, float]:
    """``"B=0.1,A=0.2"`` or a path to a JSON object."""
    path = Path(text)
    if path.suffix == ".json" and path.exists():
        obj = json.loads(path.read_text())
        return {str(k): float(v) for k, v in obj.items()}
    out = {}
    for item in filter(None, text.split(",")):
        key, eq, value = item.rpartition("=")
        if not eq or not key:
            raise UsageError(f"bad --steps-with entry {item!r}; expected shape=flops")
        try:
            out[key] = float(value)
        except ValueError:
            raise UsageError(f"bad flops value in {item!r}") from None
        if not out[key] > 0:
            raise UsageError(f"flops per step must be positive in {item!r}")
    return out


def _default_e_start(family: LawFamily) -> float:
    return min(start_error(law) for law in family)


def cmd_fit(args) -> dict:
    config = FitConfig(huber_delta=args.delta, resample_bins=args.bins, residual_space=args.space)
    series_list = [lio.load_series(path, cost_unit=args.cost_unit) for path in args.runs]
    labels = [s.shape_label for s in series_list]
    dupes = sorted({x for x in labels if labels.count(x) > 1})
    if dupes:
        raise UsageError(f"duplicate shape labels across run files: {dupes}")
    units = {s.cost_unit for s in series_list}
    if len(units) > 1:
        raise UsageError(f"run files mix cost units {sorted(units)}")
    reports = []
    for series in series_list:
        log.info("fitting %s (%d points)", series.shape_label, len(series))
        reports.append(fit(series, config))
    family = LawFamily.from_laws([r.law for r in reports], shape_parameter=args.shape_parameter)
    fam_dict = lio.family_to_dict(family)
    if args.out:
        Path(args.out).write_text(lio.dumps(fam_dict))
        log.info("wrote %s", args.out)
    return {"family": fam_dict, "reports": [lio.fit_report_to_dict(r) for r in reports]}


def cmd_schedule(args) -> dict:
    family = lio.load_family(args.family)
    if args.baseline:
        if args.budget is None:
            raise UsageError("--baseline requires --budget")
        kind = "linear" if args.baseline == "linear" else "logarithmic"
        shapes = list(family.shape_order or family.labels)
        schedule = baseline_schedule(kind, shapes, args.budget, args.min_fraction)
        payload = {"schedule": lio.schedule_to_dict(schedule)}
    else:
        kwargs = {"grid_points": args.grid, "log_grid": args.log_grid}
        if args.refine_tol is not None:
            kwargs["refine_tol"] = args.refine_tol
        part = default_partition(family, args.e_start, args.e_end, **kwargs)
        schedule = greedy_schedule(part)
        payload = {"partition": lio.partition_to_dict(part), "schedule": lio.schedule_to_dict(schedule)}
    if args.steps_with:
        fps = _parse_steps_map(args.steps_with)
        e_start = args.e_start if args.e_start is not None else _default_e_start(family)
        steps = to_step_schedule(schedule, family, fps, e_start)
        payload["steps"] = [{"shape": s, "step": k} for s, k in steps]
    return payload


def cmd_simulate(args) -> dict:
    family = lio.load_family(args.family)
    schedule = lio.load_schedule(args.schedule)
    missing = [s for s in schedule.shapes if s not in family]
    if missing:
        raise LawDomainError(f"schedule shapes {missing} are not in the family")
    e_start = args.e_start if args.e_start is not None else _default_e_start(family)
    traj = simulate(
        family, schedule, e_start, args.samples, target_error=args.target, max_compute=args.max_compute
    )
    summary = {
        "kind": schedule.kind,
        "e_start": e_start,
        "end_compute": traj.end_compute,
        "end_error": traj.end_error,
        "reached": traj.reached,
        "transitions": [
            {"compute": m.compute, "error": m.error_after, "from": m.shape_from, "to": m.shape_to}
            for m in traj.transitions
        ],
    }
    if args.target is not None:
        compute = traj.compute_at(args.target)
        summary["target"] = args.target
        summary["compute_at_target"] = compute
        static = static_compute(family, args.target)
        if static:
            best = min(static, key=lambda k: (static[k], family.rank(k)))
            summary["best_static"] = {"shape": best, "compute": static[best]}
            if static[best] == 0:
                summary["savings"] = 0.0
            elif math.isfinite(compute):
                summary["savings"] = 1.0 - compute / static[best]
            else:
                summary["savings"] = None
        else:
            summary["best_static"] = None
            summary["savings"] = None
            log.warning("no static law reaches %s; savings undefined", args.target)
    if args.csv:
        Path(args.csv).write_text(lio.rows_to_csv(traj.rows()))
    if args.json_trajectory:
        summary["trajectory"] = lio.trajectory_to_dict(traj)
    if args.svg:
        curves = []
        end = traj.end_compute
        grid = np.geomspace(max(end * 1e-6, 1e-300), end, 200) if end > 0 else np.array([1.0])
        for law in family:
            curves.append((law.shape_label, grid.tolist(), evaluate(law, grid).tolist()))
        curves.append((f"{schedule.kind} schedule", traj.compute.tolist(), traj.error.tolist()))
        marks = [(m.compute, m.error_after) for m in traj.transitions]
        Path(args.svg).write_text(loglog_svg(curves, marks, title=f"{schedule.kind} schedule"))
    return summary


def cmd_frontier(args) -> dict:
    families = {Path(p).stem: lio.load_family(p) for p in args.families}
    if len(families) != len(args.families):
        raise UsageError("family files must have distinct names")
    all_d = [law.d for fam in families.values() for law in fam]
    lo = args.grid_min if args.grid_min is not None else 1e-2 * min(all_d)
    hi = args.grid_max if args.grid_max is not None else 1e4 * max(all_d)
    if not 0 < lo < hi:
        raise UsageError("need 0 < --grid-min < --grid-max")
    if args.points < 1:
        raise UsageError("--points must be positive")
    grid = np.geomspace(lo, hi, args.points)
    front = frontier(families if len(families) > 1 else next(iter(families.values())), grid)
    payload = lio.frontier_to_dict(front)
    if args.csv:
        Path(args.csv).write_text(lio.frontier_to_csv(front))
    if args.svg:
        curves = [
            ("static", grid.tolist(), [p.error for p in front.static]),
            ("scheduled", grid.tolist(), [p.error for p in front.scheduled]),
        ]
        Path(args.svg).write_text(loglog_svg(curves, title="compute-optimal frontier"))
    return payload


def cmd_flops(args) -> dict:
    try:
        shape = parse_shape(args.shape)
        teacher = parse_shape(args.teacher) if args.teacher else None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    fwd = forward_flops(shape, args.include_embedding)
    tokens = shape.tokens if isinstance(shape, ViTShape) else shape.context
    payload = {"shape": args.shape, "tokens": tokens, "forward_flops": fwd}
    if teacher is not None:
        payload["teacher_forward_flops"] = forward_flops(teacher, args.include_embedding)
    if args.batch is not None:
        if args.batch < 1:
            raise UsageError("--batch must be a positive integer")
        payload["batch"] = args.batch
        if teacher is not None:
            payload["step_flops"] = distill_step_flops(fwd, payload["teacher_forward_flops"], args.batch)
        else:
            payload["step_flops"] = train_step_flops(fwd, args.batch)
    return payload


def cmd_carbon(args) -> dict:
    try:
        run = HardwareRun(args.gpu_hours, args.watts, args.pue, args.intensity)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    mwh, tco2 = carbon(run)
    return {
        "gpu_hours": run.gpu_hours,
        "avg_watts": run.avg_watts,
        "pue": run.pue,
        "carbon_intensity_kg_per_kwh": run.carbon_intensity,
        "mwh": mwh,
        "tco2eq": tco2,
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lawtraverse", description="Plan compute-optimal adaptive training schedules.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit power laws to run files")
    p.add_argument("runs", nargs="+", help="CSV (compute,error) or JSON run files")
    p.add_argument("--delta", type=float, default=1e-3, help="Huber delta")
    p.add_argument("--bins", type=int, default=64, help="log-equidistant resampling bins")
    p.add_argument("--space", choices=("linear", "log"), default="linear", help="residual space")
    p.add_argument("--cost-unit", default="flops", help="cost unit for CSV inputs")
    p.add_argument("--shape-parameter", default="shape")
    p.add_argument("--out", help="write the fitted law family JSON here")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("schedule", help="greedy partition and schedule, or a baseline")
    p.add_argument("family")
    p.add_argument("--e-start", type=float)
    p.add_argument("--e-end", type=float)
    p.add_argument("--grid", type=int, default=512)
    p.add_argument("--refine-tol", type=float)
    p.add_argument("--log-grid", action="store_true")
    p.add_argument("--baseline", choices=("linear", "log"))
    p.add_argument("--budget", type=float)
    p.add_argument("--min-fraction", type=float, default=1e-3)
    p.add_argument("--steps-with", help="flops per step per shape: 'A=1e9,B=2e9' or a JSON file")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("simulate", help="simulate a schedule on a law family")
    p.add_argument("family")
    p.add_argument("schedule")
    p.add_argument("--e-start", type=float)
    p.add_argument("--samples", type=int, default=256)
    p.add_argument("--target", type=float)
    p.add_argument("--max-compute", type=float)
    p.add_argument("--csv", help="write the trajectory as compute,error,shape CSV")
    p.add_argument("--json-trajectory", action="store_true", help="embed samples in the JSON output")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("frontier", help="static and scheduled compute-optimal frontiers")
    p.add_argument("families", nargs="+")
    p.add_argument("--grid-min", type=float)
    p.add_argument("--grid-max", type=float)
    p.add_argument("--points", type=int, default=64)
    p.add_argument("--csv")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_frontier)

    p = sub.add_parser("flops", help="forward and step FLOPs for a model shape")
    p.add_argument("shape", help="e.g. vit:d=768,L=12,p=8,img=120x120x3 or lm:d=768,L=12,n=1024")
    p.add_argument("--batch", type=int)
    p.add_argument("--teacher", help="teacher shape for distillation steps")
    p.add_argument("--include-embedding", action="store_true")
    p.set_defaults(func=cmd_flops)

    p = sub.add_parser("carbon", help="energy and emissions of a training run")
    p.add_argument("--gpu-hours", type=float, required=True)
    p.add_argument("--watts", type=float, required=True)
    p.add_argument("--pue", type=float, default=1.1)
    p.add_argument("--intensity", type=float, default=0.385, help="kg CO2eq per kWh")
    p.set_defaults(func=cmd_carbon)
    return parser


def _apply_config(parser: argparse.ArgumentParser) -> None:
    path = os.environ.get(CONFIG_ENV)
    if not path:
        return
    try:
        config = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {CONFIG_ENV}={path}: {exc}") from None
    if not isinstance(config, dict):
        raise UsageError(f"{CONFIG_ENV} must hold a JSON object")
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for command, defaults in config.items():
        sub = subparsers.choices.get(command)
        if sub is None or not isinstance(defaults, dict):
            raise UsageError(f"unknown command section {command!r} in {CONFIG_ENV}")
        known = {a.dest for a in sub._actions}
        unknown = set(defaults) - known
        if unknown:
            raise UsageError(f"unknown options {sorted(unknown)} for {command!r} in {CONFIG_ENV}")
        sub.set_defaults(**defaults)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        _apply_config(parser)
    except UsageError as exc:
        print(f"lawtraverse: error: {exc}", file=sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        payload = args.func(args)
    except (UsageError, lio.FormatError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"lawtraverse: error: {exc}", file=sys.stderr)
        return 2
    except FitFailure as exc:
        print(f"lawtraverse: fit failed: {exc}", file=sys.stderr)
        return 1
    except (LawDomainError, InsufficientDataError, EmptyDomainError, UndefinedSavingsError, KeyError, ValueError) as exc:
        print(f"lawtraverse: error: {exc}", file=sys.stderr)
        return 1
    _emit(payload)
    return 0


if __name__ == "__main__":
    sys.exit(main())
