"""Greedy traversal between scaling laws.

At every error level the law with the cheapest marginal compute per unit of
error decrement (the largest, i.e. least negative, slope of its inverse) is
followed. Sweeping the error axis yields a disjoint partition and, from it, a
shape schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .lawcore import LawFamily, inverse_slope, start_error

TRIGGER_TYPES = ("error", "compute")
SCHEDULE_KINDS = ("greedy", "linear", "logarithmic", "explicit")


class EmptyDomainError(ValueError):
    """No law in the family is reachable anywhere in the requested range."""


@dataclass(frozen=True)
class Segment:
    e_high: float
    e_low: float
    shape: str


@dataclass(frozen=True)
class ErrorPartition:
    segments: tuple[Segment, ...]

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ValueError("a partition needs at least one segment")
        for seg in segs:
            if not seg.e_high > seg.e_low:
                raise ValueError(f"segment {seg} is empty or inverted")
        for prev, nxt in zip(segs, segs[1:]):
            if nxt.e_high != prev.e_low:
                raise ValueError("segments must be contiguous and descending")

    @property
    def e_start(self) -> float:
        return self.segments[0].e_high

    @property
    def e_end(self) -> float:
        return self.segments[-1].e_low

    @property
    def boundaries(self) -> list[float]:
        return [seg.e_low for seg in self.segments[:-1]]

    def shape_at(self, error: float) -> str:
        """Shape owning ``error``; boundaries belong to the segment above."""
        if not self.e_end <= error <= self.e_start:
            raise ValueError(f"error {error} outside partition [{self.e_end}, {self.e_start}]")
        for seg in self.segments:
            if error >= seg.e_low:
                return seg.shape
        return self.segments[-1].shape


@dataclass(frozen=True)
class Transition:
    shape: str
    trigger_type: str
    value: float

    def __post_init__(self):
        if self.trigger_type not in TRIGGER_TYPES:
            raise ValueError(f"trigger_type must be one of {TRIGGER_TYPES}")


@dataclass(frozen=True)
class Schedule:
    kind: str
    initial: str
    transitions: tuple[Transition, ...] = field(default_factory=tuple)

    def __post_init__(self):
        trans = tuple(self.transitions)
        object.__setattr__(self, "transitions", trans)
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"kind must be one of {SCHEDULE_KINDS}")
        # each trigger kind must be strictly ordered along the run
        errs = [t.value for t in trans if t.trigger_type == "error"]
        comps = [t.value for t in trans if t.trigger_type == "compute"]
        if any(b >= a for a, b in zip(errs, errs[1:])):
            raise ValueError("error triggers must be strictly descending")
        if any(b <= a for a, b in zip(comps, comps[1:])):
            raise ValueError("compute triggers must be strictly ascending")

    @property
    def shapes(self) -> list[str]:
        return [self.initial] + [t.shape for t in self.transitions]


def candidate_set(family: LawFamily, error: float) -> list[str]:
    """Labels whose law can reach ``error`` from zero compute (``c < E <= E0``)."""
    return [law.shape_label for law in family if law.c < error <= start_error(law)]


def _winner(family: LawFamily, error: float) -> Optional[str]:
    best, best_key = None, None
    for label in candidate_set(family, error):
        key = (-inverse_slope(family[label], error), family.rank(label))
        if best_key is None or key < best_key:
            best, best_key = label, key
    return best


def _refine(family, hi, lo, w_hi, w_lo, tol, out):
    """Bisect ``(lo, hi)`` where the winner changes from ``w_hi`` to ``w_lo``.

    Appends ``(boundary, label_above, label_below)`` in descending order. A
    third label met on the way splits the bracket into two problems.
    """
    while hi - lo > tol:
        mid = 0.5 * (hi + lo)
        w = _winner(family, mid)
        if w == w_hi:
            hi = mid
        elif w == w_lo:
            lo = mid
        else:
            _refine(family, hi, mid, w_hi, w, tol, out)
            _refine(family, mid, lo, w, w_lo, tol, out)
            return
    out.append((_snap(family, hi, lo), w_hi, w_lo))


def _snap(family, hi, lo):
    # a law entering at its start error gives an exactly known boundary
    for law in family:
        e0 = start_error(law)
        if lo <= e0 <= hi:
            return e0
    return 0.5 * (hi + lo)


def _edge(family, inside, outside, tol):
    """Bisect towards the last reachable error between ``inside`` and ``outside``."""
    while abs(outside - inside) > tol:
        mid = 0.5 * (inside + outside)
        if _winner(family, mid) is None:
            outside = mid
        else:
            inside = mid
    lo, hi = sorted((inside, outside))
    snapped = _snap(family, hi, lo)
    return snapped if _winner(family, snapped) is not None else inside


def partition(
    family: LawFamily,
    error_range: tuple[float, float],
    grid_points: int = 512,
    refine_tol: Optional[float] = None,
    log_grid: bool = False,
) -> ErrorPartition:
    """Split ``error_range = (E_start, E_end)`` into greedy-optimal segments.

    The argmax of the inverse slope is evaluated on a descending grid; every
    change of winner between neighbouring grid errors is bisected down to
    ``refine_tol`` (default ``1e-6 * E_start``). Grid ends where no law is
    reachable are trimmed off; an unreachable gap inside the range raises.
    """
    e_start, e_end = map(float, error_range)
    if not e_start > e_end:
        raise ValueError("E_start must exceed E_end")
    if grid_points < 16:
        raise ValueError("grid_points must be >= 16")
    if refine_tol is None:
        refine_tol = 1e-6 * e_start

    if log_grid:
        floor = max((law.c for law in family if law.c < e_end), default=0.0)
        grid = floor + np.geomspace(e_start - floor, e_end - floor, grid_points)
        grid[0], grid[-1] = e_start, e_end
    else:
        grid = np.linspace(e_start, e_end, grid_points)
    winners = [_winner(family, float(e)) for e in grid]

    live = [i for i, w in enumerate(winners) if w is not None]
    if not live:
        raise EmptyDomainError(f"no law reachable in ({e_end}, {e_start}]")
    first, last = live[0], live[-1]
    if any(w is None for w in winners[first : last + 1]):
        raise EmptyDomainError("reachable domain has an interior gap; split the range")

    top, bottom = float(grid[first]), float(grid[last])
    changes = []
    # domain edges falling strictly inside a grid cell
    if first > 0:
        top = _edge(family, top, float(grid[first - 1]), refine_tol)
    if last < len(grid) - 1:
        bottom = _edge(family, bottom, float(grid[last + 1]), refine_tol)
    for i in range(first, last):
        if winners[i] != winners[i + 1]:
            _refine(family, float(grid[i]), float(grid[i + 1]), winners[i], winners[i + 1], refine_tol, changes)

    segments = []
    high, label = top, winners[first]
    for boundary, above, below in changes:
        if not bottom < boundary < high:
            continue
        segments.append(Segment(high, boundary, above))
        high, label = boundary, below
    segments.append(Segment(high, bottom, label))
    # slivers from roundoff in start errors are folded into the segment below
    sliver = 1e-12 * e_start
    while len(segments) > 1 and segments[0].e_high - segments[0].e_low <= sliver:
        segments[:2] = [Segment(segments[0].e_high, segments[1].e_low, segments[1].shape)]
    for k in range(len(segments) - 1, 0, -1):
        seg = segments[k]
        if seg.e_high - seg.e_low <= sliver:
            prev = segments[k - 1]
            if k == len(segments) - 1:
                segments[k - 1 :] = [Segment(prev.e_high, seg.e_low, prev.shape)]
            else:
                nxt = segments[k + 1]
                segments[k : k + 2] = [Segment(seg.e_high, nxt.e_low, nxt.shape)]
    merged = [segments[0]]
    for seg in segments[1:]:
        if seg.shape == merged[-1].shape:
            merged[-1] = Segment(merged[-1].e_high, seg.e_low, seg.shape)
        else:
            merged.append(seg)
    return ErrorPartition(tuple(merged))


def greedy_schedule(part: ErrorPartition) -> Schedule:
    transitions = tuple(Transition(seg.shape, "error", seg.e_high) for seg in part.segments[1:])
    return Schedule("greedy", part.segments[0].shape, transitions)


def is_monotone(schedule: Schedule, family: LawFamily) -> bool:
    """Whether the schedule walks ``family.shape_order`` in one direction."""
    if family.shape_order is None:
        raise ValueError("family has no shape_order")
    ranks = [family.shape_order.index(s) for s in schedule.shapes]
    steps = np.diff(ranks)
    return bool(np.all(steps > 0) or np.all(steps < 0))


def baseline_schedule(
    kind: str,
    shapes: Sequence[str],
    total_budget: float,
    min_fraction: float = 1e-3,
) -> Schedule:
    """Analytic baselines that ignore the laws.

    ``linear`` spaces the switches evenly over ``total_budget``; ``logarithmic``
    spaces them evenly in log compute between ``min_fraction * total_budget``
    and ``total_budget``.
    """
    shapes = list(shapes)
    m = len(shapes)
    if m < 2:
        raise ValueError("a baseline needs at least two shapes")
    if not total_budget > 0:
        raise ValueError("total_budget must be positive")
    if not 0 < min_fraction < 1:
        raise ValueError("min_fraction must lie in (0, 1)")
    if kind == "linear":
        points = [k * total_budget / m for k in range(1, m)]
    elif kind in ("logarithmic", "log"):
        kind = "logarithmic"
        lo, hi = math.log(min_fraction * total_budget), math.log(total_budget)
        points = [math.exp(lo + k * (hi - lo) / m) for k in range(1, m)]
    else:
        raise ValueError(f"unknown baseline kind {kind!r}")
    transitions = tuple(Transition(s, "compute", p) for s, p in zip(shapes[1:], points))
    return Schedule(kind, shapes[0], transitions)
