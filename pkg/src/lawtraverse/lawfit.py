"""Robust multi-start fitting of power laws to training-run measurements.

The protocol: resample the run to points roughly equidistant in log compute,
then minimise a Huber objective with a derivative-free simplex search from a
fixed grid of starting points and keep the best result.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .lawcore import COST_UNITS, PowerLaw

MIN_FIT_POINTS = 6


class InsufficientDataError(ValueError):
    pass


class FitFailure(RuntimeError):
    """Every start failed; ``starts`` holds the per-start diagnostics."""

    def __init__(self, message, starts):
        super().__init__(message)
        self.starts = starts


@dataclass(frozen=True)
class RunSeries:
    compute: np.ndarray
    error: np.ndarray
    shape_label: str = ""
    cost_unit: str = "flops"
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        compute = np.asarray(self.compute, dtype=float).ravel()
        error = np.asarray(self.error, dtype=float).ravel()
        if compute.shape != error.shape:
            raise ValueError("compute and error must have the same length")
        if np.any(~np.isfinite(compute)) or np.any(compute <= 0):
            raise ValueError("compute values must be positive and finite")
        if np.any(~np.isfinite(error)) or np.any(error <= 0):
            raise ValueError("error values must be positive and finite")
        if self.cost_unit not in COST_UNITS:
            raise ValueError(f"unknown cost unit {self.cost_unit!r}")
        order = np.argsort(compute, kind="stable")
        object.__setattr__(self, "compute", compute[order])
        object.__setattr__(self, "error", error[order])

    @classmethod
    def from_points(cls, points, **kwargs) -> "RunSeries":
        arr = np.asarray(points, dtype=float).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1], **kwargs)

    def __len__(self):
        return len(self.compute)

    @property
    def points(self) -> list[tuple[float, float]]:
        return [(float(c), float(e)) for c, e in zip(self.compute, self.error)]

    def with_points(self, compute, error) -> "RunSeries":
        return RunSeries(compute, error, self.shape_label, self.cost_unit, dict(self.metadata))


@dataclass(frozen=True)
class FitConfig:
    huber_delta: float = 1e-3
    resample_bins: int = 64
    residual_space: str = "linear"
    b_starts: tuple[float, ...] = (0.2, 0.5, 1.0, 1.5)
    # fractions of the smallest observed error
    c_start_fractions: tuple[float, ...] = (0.0, 0.5, 0.9)
    d_starts: tuple[float, ...] = (0.1, 1.0, 10.0)
    max_iterations: int = 2000
    tolerance: float = 1e-12
    max_restarts: int = 8

    def __post_init__(self):
        if not self.huber_delta > 0:
            raise ValueError("huber_delta must be positive")
        if int(self.resample_bins) != self.resample_bins or self.resample_bins < 2:
            raise ValueError("resample_bins must be an integer >= 2")
        if self.residual_space not in ("linear", "log"):
            raise ValueError("residual_space must be 'linear' or 'log'")


@dataclass(frozen=True)
class StartResult:
    start: tuple[float, float, float, float]
    params: Optional[tuple[float, float, float, float]]
    objective: float
    iterations: int
    converged: bool
    message: str = ""


@dataclass(frozen=True)
class FitReport:
    law: PowerLaw
    objective: float
    starts: tuple[StartResult, ...]
    rmse: float
    boundary: tuple[str, ...]
    scale: float
    n_points: int

    @property
    def hugs_boundary(self) -> bool:
        return bool(self.boundary)


def resample_log_equidistant(series: RunSeries, bins: int) -> RunSeries:
    """Collapse the series onto ``bins`` geometric compute intervals.

    Each nonempty interval yields one point: geometric mean of its computes and
    arithmetic mean of its errors.
    """
    if len(series) == 0:
        raise ValueError("cannot resample an empty series")
    if bins < 2:
        raise ValueError("bins must be >= 2")
    log_c = np.log(series.compute)
    lo, hi = log_c[0], log_c[-1]
    if hi == lo:
        return series.with_points([series.compute[0]], [series.error.mean()])
    edges = np.linspace(lo, hi, bins + 1)
    idx = np.clip(np.searchsorted(edges, log_c, side="right") - 1, 0, bins - 1)
    out_c, out_e = [], []
    for k in np.unique(idx):
        members = idx == k
        if members.sum() == 1:
            out_c.append(float(series.compute[members][0]))
        else:
            out_c.append(math.exp(log_c[members].mean()))
        out_e.append(series.error[members].mean())
    return series.with_points(out_c, out_e)


def huber(residual, delta: float):
    r = np.abs(np.asarray(residual, dtype=float))
    out = np.where(r <= delta, 0.5 * r**2, delta * (r - 0.5 * delta))
    return float(out) if out.ndim == 0 else out


def _predict(params, compute):
    a, b, c, d = params
    return a * (compute + d) ** (-b) + c


def objective(series: RunSeries, params: Sequence[float], config: FitConfig = FitConfig()) -> float:
    """Mean Huber loss of the law ``params = (a, b, c, d)`` on ``series``."""
    pred = _predict(params, series.compute)
    if config.residual_space == "log":
        if np.any(pred <= 0):
            return math.inf
        residual = np.log(pred) - np.log(series.error)
    else:
        residual = pred - series.error
    value = float(np.mean(huber(residual, config.huber_delta)))
    return value if np.isfinite(value) else math.inf


def _start_grid(compute, error, config: FitConfig):
    e_min = float(error.min())
    for b0, frac, d0 in itertools.product(config.b_starts, config.c_start_fractions, config.d_starts):
        c0 = frac * e_min
        # a chosen so the first point is hit exactly
        a0 = (error[0] - c0) * (compute[0] + d0) ** b0
        yield (a0, b0, c0, d0)


def _nelder_mead(fun, x0, config: FitConfig):
    """Simplex search, restarted from its own optimum while that still helps.

    ``fatol`` is ``tolerance * delta**2`` so the stopping rule is expressed in
    units of the Huber quadratic scale rather than raw loss.
    """
    fatol = config.tolerance * config.huber_delta**2
    x = np.asarray(x0, dtype=float)
    best = fun(x)
    iterations = 0
    converged = False
    for _ in range(config.max_restarts):
        res = minimize(
            fun,
            x,
            method="Nelder-Mead",
            options={"maxiter": config.max_iterations, "xatol": 1e-9, "fatol": fatol},
        )
        iterations += int(res.nit)
        gain = best - res.fun if res.fun < best else 0.0
        if gain > 0:
            x, best = np.asarray(res.x), float(res.fun)
        converged = bool(res.success)
        if gain <= fatol:
            break
    return x, best, iterations, converged


def fit(series: RunSeries, config: FitConfig = FitConfig()) -> FitReport:
    """Fit a :class:`PowerLaw` to ``series`` by multi-start Huber minimisation.

    Compute is rescaled by its geometric mean ``s`` before optimisation, and
    parameters are searched in log space so ``a, b, d`` stay positive. Starts
    with ``c = 0`` keep the asymptote pinned at zero; the others search
    ``log c``. Returns the lowest-objective result (ties go to smaller ``b``).
    """
    if len(series) < MIN_FIT_POINTS:
        raise InsufficientDataError(f"need at least {MIN_FIT_POINTS} points, got {len(series)}")
    data = resample_log_equidistant(series, config.resample_bins)
    if len(data) < MIN_FIT_POINTS:
        raise InsufficientDataError(
            f"need at least {MIN_FIT_POINTS} points after resampling, got {len(data)}"
        )
    scale = math.exp(float(np.mean(np.log(data.compute))))
    scaled = data.with_points(data.compute / scale, data.error)

    compute, error = scaled.compute, scaled.error
    log_error = np.log(error)
    delta = config.huber_delta
    log_space = config.residual_space == "log"

    def loss(a, b, c, d):
        pred = a * (compute + d) ** (-b) + c
        if log_space:
            if np.any(pred <= 0):
                return math.inf
            r = np.abs(np.log(pred) - log_error)
        else:
            r = np.abs(pred - error)
        value = np.where(r <= delta, 0.5 * r * r, delta * (r - 0.5 * delta)).mean()
        return float(value) if np.isfinite(value) else math.inf

    results = []
    for start in _start_grid(compute, error, config):
        a0, b0, c0, d0 = start
        if c0 > 0:
            x0 = np.log([a0, b0, c0, d0])

            def unpack(x):
                return tuple(np.exp(x))
        else:
            x0 = np.log([a0, b0, d0])

            def unpack(x):
                a, b, d = np.exp(x)
                return (a, b, 0.0, d)

        def fun(x, unpack=unpack):
            params = unpack(x)
            if not all(np.isfinite(params)):
                return math.inf
            return loss(*params)

        try:
            with np.errstate(over="ignore", invalid="ignore", divide="ignore", under="ignore"):
                x, value, nit, converged = _nelder_mead(fun, x0, config)
            params = tuple(float(v) for v in unpack(x))
            ok = np.isfinite(value) and all(np.isfinite(params)) and params[0] > 0 and params[3] > 0
            results.append(StartResult(start, params if ok else None, value if ok else math.inf, nit, converged and ok))
        except (FloatingPointError, ValueError, OverflowError) as exc:
            results.append(StartResult(start, None, math.inf, 0, False, str(exc)))

    usable = [r for r in results if r.params is not None]
    if not usable:
        raise FitFailure(f"all {len(results)} starts failed for {series.shape_label!r}", results)
    best = min(usable, key=lambda r: (r.objective, r.params[1]))

    a_s, b, c, d_s = best.params
    law = PowerLaw(
        a=a_s * scale**b,
        b=b,
        c=c,
        d=d_s * scale,
        shape_label=series.shape_label,
        cost_unit=series.cost_unit,
    )
    rmse = float(np.sqrt(np.mean((_predict(best.params, scaled.compute) - scaled.error) ** 2)))

    boundary = []
    if c < 1e-8 * float(data.error.min()):
        boundary.append("c")
    if b < 1e-3 or b > 20:
        boundary.append("b")
    if d_s < 1e-6 or d_s > 1e6:
        boundary.append("d")
    return FitReport(law, best.objective, tuple(results), rmse, tuple(boundary), scale, len(data))
