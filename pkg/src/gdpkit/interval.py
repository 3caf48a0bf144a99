"""Interval arithmetic over variable boxes for tight big-M computation.

For affine constraint bodies the interval range is exact, so the resulting M
is the smallest value that keeps the relaxed constraint valid over the box.
M is clamped at zero: a constraint that cannot be violated inside the box
needs no relaxation slack, and a negative M would tighten instead of relax.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import MissingVariableError, NonlinearConstraintError
from .expr import AffineExpr, Constraint, Rel


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    def is_finite(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)


def range_of(expr: AffineExpr, box: dict[int, Interval]) -> Interval:
    """Exact range of an affine expression over a box."""
    lo = hi = expr.constant
    for vid, coef in expr.terms.items():
        if vid not in box:
            raise MissingVariableError(vid)
        iv = box[vid]
        if coef >= 0:
            lo += coef * iv.lo
            hi += coef * iv.hi
        else:
            lo += coef * iv.hi
            hi += coef * iv.lo
    return Interval(lo, hi)


def tight_m(con: Constraint, box: dict[int, Interval]) -> float:
    """Smallest valid big-M for an affine `body <= rhs` constraint over a box.

    Callers rewrite >= and = constraints into <= form first; each side of an
    equality gets its own M.
    """
    if con.rel is not Rel.LE:
        raise ValueError(f"tight_m expects a <= constraint, got '{con.rel.value}'")
    if not con.is_affine():
        raise NonlinearConstraintError(
            f"constraint '{con.label}' is nonlinear; supply an explicit M"
        )
    return max(0.0, range_of(con.affine_body(), box).hi - con.rhs)
