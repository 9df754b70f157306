"""Synthetic runs, a brute-force greedy oracle, and fixture law families.

Random streams use ``numpy.random.Generator(PCG64(seed))`` and its
``standard_normal`` (ziggurat) transform, which numpy keeps stable across
platforms for a fixed seed.

The preset families are invented fixtures with the qualitative behaviour of
real patch-size / context / width / batch / objective sweeps. They are not
fitted to any published measurements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .flopcost import LMShape, ViTShape, distill_step_flops, lm_forward_flops, train_step_flops, vit_forward_flops
from .lawcore import LawFamily, PowerLaw, evaluate, start_error
from .lawfit import RunSeries


@dataclass(frozen=True)
class SynthSpec:
    law: PowerLaw
    count: int = 64
    compute_range: tuple[float, float] = (1e-2, 1e2)
    sigma: float = 0.0
    seed: int = 0
    noise: str = "additive"  # or "log" for loss-valued series
    clip: Optional[tuple[float, float]] = (1e-6, 1.0)

    def __post_init__(self):
        if self.count < 2:
            raise ValueError("count must be >= 2")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        lo, hi = self.compute_range
        if not 0 < lo < hi:
            raise ValueError("compute_range must satisfy 0 < lo < hi")
        if self.noise not in ("additive", "log"):
            raise ValueError("noise must be 'additive' or 'log'")


def generate(spec: SynthSpec) -> RunSeries:
    lo, hi = spec.compute_range
    compute = np.geomspace(lo, hi, spec.count)
    clean = evaluate(spec.law, compute)
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    eps = rng.standard_normal(spec.count)
    if spec.sigma == 0:
        error = clean
    elif spec.noise == "additive":
        error = clean + spec.sigma * eps
    else:
        error = clean * np.exp(spec.sigma * eps)
    if spec.clip is not None:
        error = np.clip(error, *spec.clip)
    return RunSeries(
        compute,
        error,
        shape_label=spec.law.shape_label,
        cost_unit=spec.law.cost_unit,
        metadata={"seed": spec.seed, "sigma": spec.sigma},
    )


@dataclass(frozen=True)
class OracleResult:
    transitions: list[tuple[float, str, str]]  # (error, from, to)
    total_compute: float
    labels: list[str]
    complete: bool
    stopped_at: float

    @property
    def boundaries(self) -> list[float]:
        return [e for e, _, _ in self.transitions]


def greedy_micro_step_oracle(
    family: LawFamily,
    e_start: float,
    e_end: float,
    delta_e: Optional[float] = None,
) -> OracleResult:
    """March the error down in steps of ``delta_e``, paying the cheapest finite increment.

    Each step from ``E`` to ``E - delta_e`` picks the law with the smallest
    ``inverse(P, E - delta_e) - inverse(P, E)`` among laws whose asymptote lies
    below the step. Inverses are clamped at zero above a law's start error, so a
    law entering mid-step pays only for the part below its start. No
    derivatives are used.
    """
    if not e_start > e_end:
        raise ValueError("e_start must exceed e_end")
    if delta_e is None:
        delta_e = 1e-4 * (e_start - e_end)
    n = int(math.ceil((e_start - e_end) / delta_e - 1e-9))
    grid = e_start - delta_e * np.arange(n + 1)
    grid[-1] = e_end
    hi, lo = grid[:-1], grid[1:]

    order = sorted(family.labels, key=family.rank)
    costs = np.full((len(order), n), np.inf)
    for i, label in enumerate(order):
        law = family[label]
        ok = lo > law.c
        if not ok.any():
            continue
        a, b, c, d = law.params
        e0 = start_error(law)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv_hi = np.maximum(a ** (1 / b) * (np.minimum(hi[ok], e0) - c) ** (-1 / b) - d, 0.0)
            inv_lo = np.maximum(a ** (1 / b) * (np.minimum(lo[ok], e0) - c) ** (-1 / b) - d, 0.0)
        costs[i, ok] = inv_lo - inv_hi

    best = np.argmin(costs, axis=0)  # first minimum = earliest in shape order
    step_cost = costs[best, np.arange(n)]
    dead = ~np.isfinite(step_cost)
    complete = not dead.any()
    stop = int(np.argmax(dead)) if not complete else n
    labels = [order[k] for k in best[:stop]]
    transitions = [
        (float(hi[k]), labels[k - 1], labels[k]) for k in range(1, stop) if labels[k] != labels[k - 1]
    ]
    total = float(step_cost[:stop].sum())
    return OracleResult(transitions, total, labels, complete, float(grid[stop]))


def _law_from_samples(label, flops_per_sample, start, c, b, d_samples, unit="flops"):
    """Law in compute built from a per-sample curve sharing a common start error."""
    a_samples = (start - c) * d_samples**b
    return PowerLaw(
        a=a_samples * flops_per_sample**b,
        b=b,
        c=c,
        d=d_samples * flops_per_sample,
        shape_label=label,
        cost_unit=unit,
    )


def _vit_patch():
    # V640-12 on 120px images; patch 6 saturates above patch 8
    rows = [
        (24, 0.400, 1.20),
        (20, 0.360, 1.16),
        (15, 0.320, 1.12),
        (12, 0.280, 1.08),
        (10, 0.240, 1.04),
        (8, 0.200, 1.00),
        (6, 0.215, 1.00),
    ]
    laws = []
    for p, c, b in rows:
        cost = train_step_flops(vit_forward_flops(ViTShape(640, 12, p)), 1)
        laws.append(_law_from_samples(f"patch={p}", cost, 0.999, c, b, 4e3))
    return LawFamily.from_laws(laws, shape_parameter="patch")


def _lm_context():
    # loss in nats; compute axis is training FLOPs per sequence
    rows = [(128, 4.20, 1.20), (256, 3.90, 1.15), (512, 3.65, 1.10), (1024, 3.45, 1.05), (2048, 3.30, 1.00)]
    laws = []
    for n, c, b in rows:
        cost = train_step_flops(lm_forward_flops(LMShape(768, 12, n)), 1)
        laws.append(_law_from_samples(f"ctx={n}", cost, 10.8, c, b, 4e3, unit="flops"))
    return LawFamily.from_laws(laws, shape_parameter="context")


def _width():
    rows = [(192, 0.45, 1.20), (256, 0.39, 1.13), (384, 0.33, 1.07), (512, 0.28, 1.00)]
    laws = []
    for d, c, b in rows:
        cost = train_step_flops(vit_forward_flops(ViTShape(d, 12, 12)), 1)
        laws.append(_law_from_samples(f"width={d}", cost, 0.999, c, b, 4e3))
    return LawFamily.from_laws(laws, shape_parameter="width")


def _batch():
    # same cost per sample; the large batch is slower early but saturates lower
    cost = train_step_flops(vit_forward_flops(ViTShape(384, 20, 12)), 1)
    laws = [
        _law_from_samples("batch=256", cost, 0.999, 0.34, 1.1, 2e3),
        _law_from_samples("batch=2048", cost, 0.999, 0.26, 1.0, 1.6e4),
    ]
    return LawFamily.from_laws(laws, shape_parameter="batch")


def _objective():
    # distillation pays for teacher forwards but saturates lower
    student = vit_forward_flops(ViTShape(384, 20, 12))
    teacher = vit_forward_flops(ViTShape(640, 10, 12))
    laws = [
        _law_from_samples("supervised", train_step_flops(student, 1), 0.999, 0.32, 1.1, 4e3),
        _law_from_samples("distill", distill_step_flops(student, teacher, 1), 0.999, 0.24, 1.0, 4e3),
    ]
    return LawFamily.from_laws(laws, shape_parameter="objective")


PRESETS = {
    "vit_patch": _vit_patch,
    "lm_context": _lm_context,
    "width": _width,
    "batch": _batch,
    "objective": _objective,
}


def preset_family(name: str) -> LawFamily:
    try:
        return PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def random_family(rng: np.random.Generator, n_laws: int, start: float = 0.95) -> LawFamily:
    """Random ordered family with a common start error and increasing per-unit cost.

    Later shapes cost more per unit of progress but saturate lower, so the
    greedy schedule generally walks the order from first to last.
    """
    laws = []
    cost = 1.0
    c = rng.uniform(0.25, 0.45)
    for i in range(n_laws):
        b = rng.uniform(0.4, 1.6)
        d = rng.uniform(0.3, 3.0)
        laws.append(_law_from_samples(f"s{i}", cost, start, c, b, d))
        cost *= rng.uniform(1.3, 3.0)
        c *= rng.uniform(0.6, 0.9)
    return LawFamily.from_laws(laws, shape_parameter="shape")
