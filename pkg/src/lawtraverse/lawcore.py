"""Saturating power laws ``E = a * (C + d) ** -b + c`` and their inverses.

All functions are pure and accept either Python floats or numpy arrays for the
compute/error argument.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

COST_UNITS = ("flops", "tokens", "samples", "seconds")


class LawDomainError(ValueError):
    """Raised when a law is evaluated or inverted outside its domain."""


class UnreachableError(LawDomainError):
    """The requested error is at or below the law's asymptote."""


class AboveStartError(LawDomainError):
    """The requested error lies above the law's zero-compute error."""


@dataclass(frozen=True)
class PowerLaw:
    a: float
    b: float
    c: float
    d: float
    shape_label: str = ""
    cost_unit: str = "flops"

    def __post_init__(self):
        for name in ("a", "b", "d"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
        if not (np.isfinite(self.c) and self.c >= 0):
            raise ValueError(f"c must be nonnegative and finite, got {self.c!r}")
        if self.cost_unit not in COST_UNITS:
            raise ValueError(f"unknown cost unit {self.cost_unit!r}")

    @property
    def params(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)


@dataclass(frozen=True)
class LawFamily:
    """Laws over one shape parameter sharing a cost unit.

    ``shape_order`` is a total order over the labels (first = first in a
    monotone schedule, e.g. the largest patch size). When omitted, ties are
    broken by label and :func:`is_monotone` refuses to run.
    """

    laws: tuple[PowerLaw, ...]
    cost_unit: str = "flops"
    shape_parameter: str = "shape"
    shape_order: Optional[tuple[str, ...]] = None
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        laws = tuple(self.laws)
        object.__setattr__(self, "laws", laws)
        if not laws:
            raise ValueError("a law family needs at least one law")
        labels = [law.shape_label for law in laws]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate shape labels in family: {labels}")
        units = {law.cost_unit for law in laws}
        if units != {self.cost_unit}:
            raise ValueError(f"laws use cost units {sorted(units)}, family uses {self.cost_unit!r}")
        if self.shape_order is not None:
            order = tuple(self.shape_order)
            if sorted(order) != sorted(labels):
                raise ValueError("shape_order must be a permutation of the family's labels")
            object.__setattr__(self, "shape_order", order)
        object.__setattr__(self, "_index", {law.shape_label: law for law in laws})

    @classmethod
    def from_laws(cls, laws: Iterable[PowerLaw], ordered: bool = True, **kwargs) -> "LawFamily":
        laws = tuple(laws)
        unit = kwargs.pop("cost_unit", laws[0].cost_unit if laws else "flops")
        order = tuple(law.shape_label for law in laws) if ordered else None
        return cls(laws, cost_unit=unit, shape_order=order, **kwargs)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(law.shape_label for law in self.laws)

    def __getitem__(self, label: str) -> PowerLaw:
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"shape {label!r} not in family {self.labels}") from None

    def __contains__(self, label) -> bool:
        return label in self._index

    def __iter__(self):
        return iter(self.laws)

    def __len__(self):
        return len(self.laws)

    def rank(self, label: str) -> tuple:
        """Sort key used to break ties: shape_order position, then label."""
        if self.shape_order is None:
            return (0, label)
        return (self.shape_order.index(label), label)


def evaluate(law: PowerLaw, compute):
    compute_arr = np.asarray(compute, dtype=float)
    if np.any(compute_arr < 0) or np.any(np.isnan(compute_arr)):
        raise LawDomainError(f"compute must be nonnegative, got {compute!r}")
    out = law.a * (compute_arr + law.d) ** (-law.b) + law.c
    return float(out) if out.ndim == 0 else out


def start_error(law: PowerLaw) -> float:
    """Error predicted at zero compute."""
    return law.a * law.d ** (-law.b) + law.c


def asymptote(law: PowerLaw) -> float:
    return law.c


def _check_window(law: PowerLaw, error, clamp: bool) -> np.ndarray:
    err = np.asarray(error, dtype=float)
    if np.any(~(err > law.c)):
        raise UnreachableError(
            f"error {error!r} is not above the asymptote c={law.c!r} of {law.shape_label!r}"
        )
    if not clamp and np.any(err > start_error(law)):
        raise AboveStartError(
            f"error {error!r} exceeds start error {start_error(law)!r} of {law.shape_label!r}"
        )
    return err


def inverse(law: PowerLaw, error, clamp: bool = False):
    """Compute needed for ``law`` to reach ``error``.

    With ``clamp=True`` errors above the start error map to zero compute
    instead of raising.
    """
    err = _check_window(law, error, clamp)
    out = law.a ** (1.0 / law.b) * (err - law.c) ** (-1.0 / law.b) - law.d
    # roundoff at the start error can leave a tiny negative value
    out = np.maximum(out, 0.0)
    if clamp:
        out = np.where(err >= start_error(law), 0.0, out)
    return float(out) if out.ndim == 0 else out


def inverse_clamped(law: PowerLaw, error):
    return inverse(law, error, clamp=True)


def inverse_slope(law: PowerLaw, error):
    """Derivative of the inverse law with respect to error (always negative)."""
    err = _check_window(law, error, clamp=False)
    b = law.b
    out = -(law.a ** (1.0 / b) / b) * (err - law.c) ** (-(1.0 + b) / b)
    return float(out) if out.ndim == 0 else out


def is_reachable(law: PowerLaw, error: float) -> bool:
    return law.c < error <= start_error(law)


def non_monotone_asymptotes(family: LawFamily, order: Optional[Sequence[str]] = None) -> list[tuple[str, str]]:
    """Adjacent shape pairs where moving along ``order`` raises the asymptote.

    With the order running from large to small patches, a returned pair
    ``(p, q)`` means the smaller shape ``q`` saturates at a worse error than ``p``.
    """
    order = tuple(order or family.shape_order or family.labels)
    flagged = []
    for prev, nxt in zip(order, order[1:]):
        if asymptote(family[nxt]) > asymptote(family[prev]):
            flagged.append((prev, nxt))
    return flagged
