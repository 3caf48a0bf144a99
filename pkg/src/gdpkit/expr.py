"""Affine expressions, a small factorable nonlinear tree, and constraints.

Variables are addressed by integer id; the model layer owns id allocation and
carries the name/bound metadata in :class:`VariableRef`.  Everything in this
module is immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .errors import MissingVariableError, NonfiniteResultError


class VarKind(Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"


class Rel(Enum):
    """Constraint relation."""

    LE = "<="
    GE = ">="
    EQ = "="


@dataclass(frozen=True)
class VariableRef:
    """A decision variable with bounds.

    Binary variables always carry the bounds [0, 1]; they only appear in
    reformulated models (user-facing GDP variables are continuous).
    """

    id: int
    name: str
    lower: float
    upper: float
    kind: VarKind = VarKind.CONTINUOUS

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(
                f"variable '{self.name}': lower bound {self.lower} exceeds upper {self.upper}"
            )
        if self.kind is VarKind.BINARY and (self.lower, self.upper) != (0.0, 1.0):
            raise ValueError(f"binary variable '{self.name}' must have bounds [0, 1]")

    # Small arithmetic surface so models and tests read naturally:
    # x + 2*y - 1 builds an AffineExpr.
    def _as_expr(self) -> "AffineExpr":
        return AffineExpr({self.id: 1.0})

    def __add__(self, other):
        return self._as_expr() + other

    __radd__ = __add__

    def __sub__(self, other):
        return self._as_expr() - other

    def __rsub__(self, other):
        return (-1.0) * self._as_expr() + other

    def __mul__(self, other):
        return self._as_expr() * other

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self._as_expr()


class AffineExpr:
    """Sum of coefficient * variable terms plus a constant.

    Canonical form: exact zero coefficients are never stored.  No epsilon
    thresholding happens here; dropping near-zeros would make interval-based
    big-M values depend on construction order.
    """

    __slots__ = ("terms", "constant")

    def __init__(self, terms: dict[int, float] | None = None, constant: float = 0.0):
        cleaned = {}
        if terms:
            for vid, coef in terms.items():
                c = float(coef)
                if c != 0.0:
                    cleaned[vid] = c
        object.__setattr__(self, "terms", cleaned)
        object.__setattr__(self, "constant", float(constant))

    def __setattr__(self, name, value):
        raise AttributeError("AffineExpr is immutable")

    def variables(self) -> set[int]:
        return set(self.terms)

    def coefficient(self, var_id: int) -> float:
        return self.terms.get(var_id, 0.0)

    def evaluate(self, point: dict[int, float]) -> float:
        total = self.constant
        for vid, coef in self.terms.items():
            if vid not in point:
                raise MissingVariableError(vid)
            total += coef * point[vid]
        return total

    def is_constant(self) -> bool:
        return not self.terms

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, VariableRef):
            other = other._as_expr()
        if isinstance(other, (int, float)):
            return AffineExpr(self.terms, self.constant + other)
        if isinstance(other, AffineExpr):
            merged = dict(self.terms)
            for vid, coef in other.terms.items():
                merged[vid] = merged.get(vid, 0.0) + coef
            return AffineExpr(merged, self.constant + other.constant)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, VariableRef):
            other = other._as_expr()
        if isinstance(other, (int, float)):
            return self + (-other)
        if isinstance(other, AffineExpr):
            return self + (-1.0) * other
        return NotImplemented

    def __rsub__(self, other):
        return (-1.0) * self + other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return AffineExpr({v: c * other for v, c in self.terms.items()}, self.constant * other)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self

    def __eq__(self, other):
        return (
            isinstance(other, AffineExpr)
            and self.terms == other.terms
            and self.constant == other.constant
        )

    def __hash__(self):
        return hash((frozenset(self.terms.items()), self.constant))

    def __repr__(self):
        parts = [f"{c}*v{v}" for v, c in sorted(self.terms.items())]
        if self.constant or not parts:
            parts.append(str(self.constant))
        return "AffineExpr(" + " + ".join(parts) + ")"


# -- nonlinear expression tree ----------------------------------------------
#
# The node set is deliberately minimal: polynomials plus the scale
# substitution that backs the epsilon perspective transform.  There is no
# simplification and no differentiation.


class NlExpr:
    """Base class for nonlinear expression nodes."""

    __slots__ = ()

    def variables(self) -> set[int]:
        raise NotImplementedError


@dataclass(frozen=True)
class NlConst(NlExpr):
    value: float

    def variables(self):
        return set()


@dataclass(frozen=True)
class NlVar(NlExpr):
    var: int

    def variables(self):
        return {self.var}


@dataclass(frozen=True)
class NlSum(NlExpr):
    children: tuple[NlExpr, ...]

    def variables(self):
        out = set()
        for ch in self.children:
            out |= ch.variables()
        return out


@dataclass(frozen=True)
class NlProd(NlExpr):
    children: tuple[NlExpr, ...]

    def variables(self):
        out = set()
        for ch in self.children:
            out |= ch.variables()
        return out


@dataclass(frozen=True)
class NlPow(NlExpr):
    base: NlExpr
    exponent: int

    def variables(self):
        return self.base.variables()


@dataclass(frozen=True)
class NlScaled(NlExpr):
    """`child` with every variable occurrence v replaced by v / divisor.

    The divisor is an expression over the original variables; nesting works
    because an enclosing substitution textually reaches the divisor too.
    """

    child: NlExpr
    divisor: NlExpr

    def variables(self):
        return self.child.variables() | self.divisor.variables()


def nl_from_affine(expr: AffineExpr) -> NlExpr:
    """Lift an affine expression into the nonlinear node set."""
    parts: list[NlExpr] = []
    for vid, coef in expr.terms.items():
        if coef == 1.0:
            parts.append(NlVar(vid))
        else:
            parts.append(NlProd((NlConst(coef), NlVar(vid))))
    if expr.constant != 0.0 or not parts:
        parts.append(NlConst(expr.constant))
    if len(parts) == 1:
        return parts[0]
    return NlSum(tuple(parts))


def affine_from_nl(expr: NlExpr) -> AffineExpr | None:
    """Collect an NlExpr into affine form, or return None if it is nonlinear."""
    if isinstance(expr, NlConst):
        return AffineExpr({}, expr.value)
    if isinstance(expr, NlVar):
        return AffineExpr({expr.var: 1.0})
    if isinstance(expr, NlSum):
        total = AffineExpr()
        for ch in expr.children:
            part = affine_from_nl(ch)
            if part is None:
                return None
            total = total + part
        return total
    if isinstance(expr, NlProd):
        scale = 1.0
        linear: AffineExpr | None = None
        for ch in expr.children:
            part = affine_from_nl(ch)
            if part is None:
                return None
            if part.is_constant():
                scale *= part.constant
            elif linear is None:
                linear = part
            else:
                return None  # product of two non-constant factors
        if linear is None:
            return AffineExpr({}, scale)
        return linear * scale
    if isinstance(expr, NlPow):
        base = affine_from_nl(expr.base)
        if base is None:
            return None
        if expr.exponent == 0:
            return AffineExpr({}, 1.0)
        if expr.exponent == 1:
            return base
        if base.is_constant():
            return AffineExpr({}, base.constant ** expr.exponent)
        return None
    if isinstance(expr, NlScaled):
        if not expr.child.variables():
            return affine_from_nl(expr.child)
        return None
    raise TypeError(f"unknown node {type(expr).__name__}")


def _eval_nl(expr: NlExpr, point: dict[int, float], scale: float) -> float:
    if isinstance(expr, NlConst):
        return expr.value
    if isinstance(expr, NlVar):
        if expr.var not in point:
            raise MissingVariableError(expr.var)
        return point[expr.var] / scale
    if isinstance(expr, NlSum):
        return sum(_eval_nl(ch, point, scale) for ch in expr.children)
    if isinstance(expr, NlProd):
        out = 1.0
        for ch in expr.children:
            out *= _eval_nl(ch, point, scale)
        return out
    if isinstance(expr, NlPow):
        return _eval_nl(expr.base, point, scale) ** expr.exponent
    if isinstance(expr, NlScaled):
        s = _eval_nl(expr.divisor, point, scale)
        if s == 0.0 or not math.isfinite(s):
            raise NonfiniteResultError(f"scale-substitution divisor evaluated to {s}")
        return _eval_nl(expr.child, point, scale * s)
    raise TypeError(f"unknown node {type(expr).__name__}")


def evaluate(expr: AffineExpr | NlExpr, point: dict[int, float]) -> float:
    """Value of an expression at a point (map variable id -> value)."""
    if isinstance(expr, AffineExpr):
        return expr.evaluate(point)
    return _eval_nl(expr, point, 1.0)


def substitute_scaled(expr: NlExpr | AffineExpr, divisor: AffineExpr | NlExpr) -> NlExpr:
    """Replace every variable occurrence v in `expr` by v / divisor.

    Evaluating the result at a point where the divisor takes value s > 0
    equals evaluating `expr` at the componentwise-scaled point / s.
    """
    if isinstance(expr, AffineExpr):
        expr = nl_from_affine(expr)
    if isinstance(divisor, AffineExpr):
        divisor = nl_from_affine(divisor)
    return NlScaled(expr, divisor)


def rename_variables(expr, mapping: dict[int, int]):
    """Rewrite variable ids through `mapping` (ids absent from it are kept)."""
    if isinstance(expr, AffineExpr):
        terms = {}
        for vid, coef in expr.terms.items():
            nid = mapping.get(vid, vid)
            terms[nid] = terms.get(nid, 0.0) + coef
        return AffineExpr(terms, expr.constant)
    if isinstance(expr, NlConst):
        return expr
    if isinstance(expr, NlVar):
        return NlVar(mapping.get(expr.var, expr.var))
    if isinstance(expr, NlSum):
        return NlSum(tuple(rename_variables(ch, mapping) for ch in expr.children))
    if isinstance(expr, NlProd):
        return NlProd(tuple(rename_variables(ch, mapping) for ch in expr.children))
    if isinstance(expr, NlPow):
        return NlPow(rename_variables(expr.base, mapping), expr.exponent)
    if isinstance(expr, NlScaled):
        return NlScaled(
            rename_variables(expr.child, mapping), rename_variables(expr.divisor, mapping)
        )
    raise TypeError(f"unknown node {type(expr).__name__}")


def linearity_of(expr: AffineExpr | NlExpr) -> str:
    """Classify an expression as 'affine' or 'nonlinear' (exact for this node set)."""
    if isinstance(expr, AffineExpr):
        return "affine"
    return "affine" if affine_from_nl(expr) is not None else "nonlinear"


@dataclass(frozen=True)
class Constraint:
    """A relational constraint `body REL rhs`.

    Equalities are stored as a single record; reformulation and solving expand
    them to <=/>= pairs where the algorithm needs one-sided rows.
    """

    label: str
    body: AffineExpr | NlExpr
    rel: Rel
    rhs: float

    def is_affine(self) -> bool:
        return linearity_of(self.body) == "affine"

    def affine_body(self) -> AffineExpr:
        if isinstance(self.body, AffineExpr):
            return self.body
        folded = affine_from_nl(self.body)
        if folded is None:
            raise NonlinearConstraintError(f"constraint '{self.label}' has a nonlinear body")
        return folded

    def variables(self) -> set[int]:
        return self.body.variables()

    def __repr__(self):
        return f"Constraint({self.label!r}: {self.body!r} {self.rel.value} {self.rhs})"
