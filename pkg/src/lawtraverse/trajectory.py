"""Composed training curves under shape schedules.

Switching model:
    While following law ``P`` from error ``E`` the run sits at effective
    compute ``inverse(P, E)`` and progresses along ``P``. Switching to ``Q``
    resumes at ``inverse(Q, E)``. If ``E`` is above ``Q``'s zero-compute error
    the run restarts ``Q`` from zero compute and its error becomes
    ``start_error(Q)``; greedy schedules never hit this case.

With this model the compute to reach an error is the integral of the
per-law ``|d inverse / dE|`` along the path, which is why the greedy
partition is never beaten by another schedule over the same laws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .lawcore import LawFamily, LawDomainError, evaluate, inverse, inverse_clamped, start_error
from .traverse import ErrorPartition, Schedule, candidate_set, partition


class UnreachableTargetError(LawDomainError):
    def __init__(self, target, smallest):
        super().__init__(
            f"target error {target!r} is unreachable; smallest reachable error is above {smallest!r}"
        )
        self.target = target
        self.smallest = smallest


class UndefinedSavingsError(LawDomainError):
    pass


@dataclass(frozen=True)
class Piece:
    """Stretch of a run spent on one law, in cumulative compute ``[c0, c1]``."""

    shape: str
    c0: float
    c1: float
    t0: float
    e0: float
    e1: float


@dataclass(frozen=True)
class TransitionMark:
    compute: float
    error_before: float
    error_after: float
    shape_from: str
    shape_to: str


@dataclass
class Trajectory:
    compute: np.ndarray
    error: np.ndarray
    shape: list[str]
    pieces: list[Piece]
    transitions: list[TransitionMark]
    family: LawFamily = field(repr=False)
    reached: bool = True

    @property
    def end_compute(self) -> float:
        return self.pieces[-1].c1

    @property
    def end_error(self) -> float:
        return self.pieces[-1].e1

    def error_at(self, compute: float) -> float:
        if compute < 0:
            raise ValueError("compute must be nonnegative")
        for piece in self.pieces:
            if compute <= piece.c1:
                dt = max(compute - piece.c0, 0.0)
                return min(piece.e0, evaluate(self.family[piece.shape], piece.t0 + dt))
        raise ValueError(f"compute {compute} beyond the simulated horizon {self.end_compute}")

    def compute_at(self, error: float) -> float:
        """Cumulative compute at which the run first reaches ``error`` (inf if never)."""
        for piece in self.pieces:
            if error >= piece.e0:
                return piece.c0
            if error >= piece.e1:
                law = self.family[piece.shape]
                return piece.c0 + inverse(law, error) - piece.t0
        return math.inf

    def rows(self):
        return list(zip(self.compute.tolist(), self.error.tolist(), self.shape))


def _check_shapes(family: LawFamily, schedule: Schedule):
    missing = [s for s in schedule.shapes if s not in family]
    if missing:
        raise KeyError(f"schedule references shapes not in family: {missing}")


def simulate(
    family: LawFamily,
    schedule: Schedule,
    e_start: float,
    sample_count: int = 256,
    *,
    target_error: Optional[float] = None,
    max_compute: Optional[float] = None,
) -> Trajectory:
    """Run ``schedule`` on ``family`` from ``e_start``.

    The run stops at ``target_error`` or ``max_compute``, whichever comes
    first. Without either it stops at ten times the last switch (or, with no
    switches, once the initial law has covered 99% of its way to the asymptote).
    An unreachable target yields a trajectory with ``reached=False``.
    """
    _check_shapes(family, schedule)
    if all(e_start <= law.c for law in family):
        raise LawDomainError(f"E_start={e_start} is below every asymptote in the family")

    shape = schedule.initial
    law = family[shape]
    if e_start <= law.c:
        raise LawDomainError(f"E_start={e_start} is not above the asymptote of {shape!r}")
    err = min(e_start, start_error(law))
    t = inverse_clamped(law, err)
    cum = 0.0
    pieces: list[Piece] = []
    marks: list[TransitionMark] = []
    stop_c = max_compute if max_compute is not None else math.inf
    reached = True
    done = False

    def advance(limit_c):
        """Follow the current law up to cumulative compute ``limit_c``."""
        nonlocal cum, t, err
        target_c = math.inf
        if target_error is not None:
            if target_error >= err:
                target_c = cum
            elif target_error > law.c:
                target_c = cum + inverse(law, target_error) - t
        end_c = min(limit_c, target_c, stop_c)
        if math.isinf(end_c):
            return False, True
        new_t = t + (end_c - cum)
        new_err = min(err, evaluate(law, new_t))
        if end_c == target_c:
            new_err = min(err, target_error)
        pieces.append(Piece(shape, cum, end_c, t, err, new_err))
        cum, t, err = end_c, new_t, new_err
        return end_c == target_c or end_c == stop_c, False

    for trans in schedule.transitions:
        if trans.trigger_type == "error":
            if err <= trans.value:
                switch_c = cum
            elif trans.value > law.c:
                switch_c = cum + inverse(law, trans.value) - t
            else:
                switch_c = math.inf
        else:
            switch_c = max(cum, trans.value)
        done, stuck = advance(switch_c)
        if done:
            break
        if stuck:
            reached = False
            break
        nxt = family[trans.shape]
        new_t = inverse_clamped(nxt, err) if err > nxt.c else None
        if new_t is None:
            # the new law saturates above the current error: no further progress
            marks.append(TransitionMark(cum, err, err, shape, trans.shape))
            shape, law = trans.shape, nxt
            t = math.inf
            reached = target_error is None
            done = True
            break
        after = min(err, evaluate(nxt, new_t))
        marks.append(TransitionMark(cum, err, after, shape, trans.shape))
        shape, law, t, err = trans.shape, nxt, new_t, after

    if not done and reached:
        if target_error is None and max_compute is None:
            if marks:
                horizon = 10 * marks[-1].compute if marks[-1].compute > 0 else 1.0
            else:
                horizon = cum + inverse(law, law.c + 0.01 * (err - law.c)) - t
            stop_c = horizon
        _, stuck = advance(math.inf)
        if stuck:
            reached = False

    if not pieces:
        pieces.append(Piece(shape, cum, cum, t if math.isfinite(t) else 0.0, err, err))
    if not reached and target_error is not None:
        # extend for display only; the target is never met
        last = pieces[-1]
        if math.isfinite(t):
            extra = max(last.c1, 1.0) * 9
            pieces.append(Piece(shape, cum, cum + extra, t, err, evaluate(law, t + extra)))

    comp, errs, shapes = _sample(family, pieces, marks, sample_count)
    return Trajectory(comp, errs, shapes, pieces, marks, family, reached)


def _sample(family, pieces, marks, sample_count):
    end = pieces[-1].c1
    pts = [0.0]
    if end > 0:
        lo = end * 1e-6
        first_pos = next((p.c1 for p in pieces if p.c1 > 0), end)
        lo = min(lo, first_pos)
        pts.extend(np.geomspace(lo, end, max(sample_count - 1, 2)).tolist())
    pts.extend(m.compute for m in marks)
    pts = sorted(set(p for p in pts if p <= end))
    comp, errs, shapes = [], [], []
    mark_at = {}
    for m in marks:
        mark_at.setdefault(m.compute, []).append(m)
    for c in pts:
        for piece in pieces:
            if c <= piece.c1 or piece is pieces[-1]:
                break
        if c in mark_at:
            for m in mark_at[c]:
                comp.append(c)
                errs.append(m.error_before)
                shapes.append(m.shape_from)
            comp.append(c)
            errs.append(mark_at[c][-1].error_after)
            shapes.append(mark_at[c][-1].shape_to)
            continue
        law = family[piece.shape]
        dt = max(c - piece.c0, 0.0)
        comp.append(c)
        errs.append(min(piece.e0, evaluate(law, piece.t0 + dt)) if math.isfinite(piece.t0) else piece.e0)
        shapes.append(piece.shape)
    # clip roundoff so the sampled curve stays monotone
    errs = np.minimum.accumulate(np.asarray(errs))
    return np.asarray(comp), errs, shapes


def _smallest_reachable(family: LawFamily) -> float:
    return min(law.c for law in family)


def scheduled_compute(family: LawFamily, part: ErrorPartition, e_target: float) -> float:
    """Compute for the greedy schedule of ``part`` to go from its top to ``e_target``."""
    if e_target >= part.e_start:
        return 0.0
    if e_target < part.e_end:
        raise UnreachableTargetError(e_target, max(_smallest_reachable(family), part.e_end))
    total = 0.0
    for seg in part.segments:
        if seg.e_high <= e_target:
            break
        law = family[seg.shape]
        total += inverse(law, max(seg.e_low, e_target)) - inverse_clamped(law, seg.e_high)
    return total


def default_partition(family: LawFamily, e_start: Optional[float] = None, e_end: Optional[float] = None, **kwargs) -> ErrorPartition:
    """Partition from the lowest zero-compute error down to just above the lowest asymptote."""
    if e_start is None:
        e_start = min(start_error(law) for law in family)
    if e_end is None:
        floor = _smallest_reachable(family)
        e_end = floor + 1e-9 * (e_start - floor)
    return partition(family, (e_start, e_end), **kwargs)


def static_compute(family: LawFamily, e_target: float) -> dict[str, float]:
    """Compute each law needs on its own to reach ``e_target``."""
    return {label: inverse(family[label], e_target) for label in candidate_set(family, e_target)}


def savings(family: LawFamily, part: ErrorPartition, e_target: float) -> float:
    """Fraction of compute saved by the greedy schedule over the best static law."""
    sched = scheduled_compute(family, part, e_target)
    static = static_compute(family, e_target)
    if not static:
        raise UndefinedSavingsError(f"no static law reaches {e_target!r}; savings undefined")
    best = min(static.values())
    # at the top of the domain both sides are zero up to roundoff
    if sched == 0.0 or best == 0.0:
        return 0.0
    return 1.0 - sched / best


@dataclass(frozen=True)
class FrontierPoint:
    compute: float
    error: float
    shape: str
    model: str = ""


@dataclass
class Frontier:
    static: list[FrontierPoint]
    scheduled: list[FrontierPoint]


def frontier(
    families: Union[LawFamily, Sequence[LawFamily], Mapping[str, LawFamily]],
    compute_grid: Sequence[float],
    **partition_kwargs,
) -> Frontier:
    """Compute-optimal errors over ``compute_grid`` for static and scheduled runs.

    ``families`` may be a single family, a list (models named by index) or a
    mapping from model name to family. The scheduled frontier runs the greedy
    schedule of each family and keeps the best model per grid point.
    """
    if isinstance(families, LawFamily):
        named = {"": families}
    elif isinstance(families, Mapping):
        named = dict(families)
    else:
        named = {str(i): fam for i, fam in enumerate(families)}
    grid = np.asarray(compute_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("compute grid is empty")

    static = []
    for c in grid:
        best = None
        for model, fam in named.items():
            for law in fam:
                e = evaluate(law, float(c))
                if best is None or e < best.error:
                    best = FrontierPoint(float(c), e, law.shape_label, model)
        static.append(best)

    parts = {model: default_partition(fam, **partition_kwargs) for model, fam in named.items()}
    scheduled = []
    for c in grid:
        best = None
        for model, fam in named.items():
            part = parts[model]
            e = scheduled_error(fam, part, float(c))
            if best is None or e < best.error:
                best = FrontierPoint(float(c), e, part.shape_at(e), model)
        scheduled.append(best)
    return Frontier(static, scheduled)


def scheduled_error(family: LawFamily, part: ErrorPartition, compute: float) -> float:
    """Error the greedy schedule reaches after ``compute`` (inverse of :func:`scheduled_compute`)."""
    if compute <= 0:
        return part.e_start
    if compute >= scheduled_compute(family, part, part.e_end):
        return part.e_end
    # evaluate within the segment that contains the budget
    spent = 0.0
    for seg in part.segments:
        law = family[seg.shape]
        t0 = inverse_clamped(law, seg.e_high)
        cost = inverse(law, seg.e_low) - t0
        if spent + cost >= compute:
            return max(seg.e_low, min(seg.e_high, evaluate(law, t0 + compute - spent)))
        spent += cost
    return part.e_end


def to_step_schedule(
    schedule: Schedule,
    family: LawFamily,
    flops_per_step: Mapping[str, float],
    e_start: float,
) -> list[tuple[str, int]]:
    """Translate a schedule into ``(shape, step)`` switch points for a trainer.

    Each stretch on one shape takes ``ceil(compute / flops_per_step[shape])``
    optimizer steps; the returned step is where the new shape starts.
    """
    missing = [s for s in schedule.shapes if s not in flops_per_step]
    if missing:
        raise KeyError(f"no flops_per_step entry for shapes {missing}")
    if not schedule.transitions:
        return []
    traj = simulate(family, schedule, e_start, sample_count=2, max_compute=None, target_error=None)
    out = []
    step = 0
    prev_c = 0.0
    for mark in traj.transitions:
        seg_compute = mark.compute - prev_c
        ratio = seg_compute / flops_per_step[mark.shape_from]
        # a stretch always takes at least one step so indices strictly increase
        step += max(1, math.ceil(ratio * (1 - 1e-12)))
        out.append((mark.shape_to, step))
        prev_c = mark.compute
    return out
