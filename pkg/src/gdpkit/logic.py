"""Boolean propositions over indicator variables and their algebraic compilation.

Propositions are converted to conjunctive normal form with the classic
equivalence-preserving rewrites, applied in this order: biconditional
elimination, implication elimination, negation push-down (De Morgan plus
double-negation removal), then distribution of OR over AND.  Each CNF clause
then maps to one integer-linear inequality, and cardinality constraints map to
a single sum row.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import UnmappedIndicatorError
from .expr import AffineExpr, Constraint, Rel


class Proposition:
    """Base class for proposition nodes.  Combine with &, |, ~ or the
    implies()/iff() helpers."""

    __slots__ = ()

    def __and__(self, other):
        return And((self, other))

    def __or__(self, other):
        return Or((self, other))

    def __invert__(self):
        return Not(self)

    def implies(self, other) -> "Implies":
        return Implies(self, other)

    def iff(self, other) -> "Iff":
        return Iff(self, other)

    def indicators(self) -> set[str]:
        raise NotImplementedError

    def evaluate(self, assignment: dict[str, bool]) -> bool:
        raise NotImplementedError


@dataclass(frozen=True)
class Lit(Proposition):
    ind: str
    negated: bool = False

    def __invert__(self):
        return Lit(self.ind, not self.negated)

    def indicators(self):
        return {self.ind}

    def evaluate(self, assignment):
        value = assignment[self.ind]
        return not value if self.negated else value

    def __repr__(self):
        return ("!" if self.negated else "") + self.ind


@dataclass(frozen=True)
class Not(Proposition):
    child: Proposition

    def indicators(self):
        return self.child.indicators()

    def evaluate(self, assignment):
        return not self.child.evaluate(assignment)


@dataclass(frozen=True)
class And(Proposition):
    children: tuple[Proposition, ...]

    def indicators(self):
        out = set()
        for ch in self.children:
            out |= ch.indicators()
        return out

    def evaluate(self, assignment):
        return all(ch.evaluate(assignment) for ch in self.children)


@dataclass(frozen=True)
class Or(Proposition):
    children: tuple[Proposition, ...]

    def indicators(self):
        out = set()
        for ch in self.children:
            out |= ch.indicators()
        return out

    def evaluate(self, assignment):
        return any(ch.evaluate(assignment) for ch in self.children)


@dataclass(frozen=True)
class Implies(Proposition):
    lhs: Proposition
    rhs: Proposition

    def indicators(self):
        return self.lhs.indicators() | self.rhs.indicators()

    def evaluate(self, assignment):
        return (not self.lhs.evaluate(assignment)) or self.rhs.evaluate(assignment)


@dataclass(frozen=True)
class Iff(Proposition):
    lhs: Proposition
    rhs: Proposition

    def indicators(self):
        return self.lhs.indicators() | self.rhs.indicators()

    def evaluate(self, assignment):
        return self.lhs.evaluate(assignment) == self.rhs.evaluate(assignment)


Clause = frozenset  # of Lit


def _clause_key(clause: Clause) -> tuple:
    return tuple(sorted((lit.ind, lit.negated) for lit in clause))


@dataclass(frozen=True)
class CnfFormula:
    """Conjunction of clauses; each clause is a set of literals.

    Tautological clauses (a literal together with its negation) are dropped
    and duplicate clauses merged, so clause-set equality is well defined.
    """

    clauses: tuple[Clause, ...]

    def clause_set(self) -> frozenset:
        return frozenset(self.clauses)

    def indicators(self) -> set[str]:
        return {lit.ind for clause in self.clauses for lit in clause}

    def evaluate(self, assignment: dict[str, bool]) -> bool:
        return all(any(lit.evaluate(assignment) for lit in cl) for cl in self.clauses)


def _eliminate_iff(p: Proposition) -> Proposition:
    if isinstance(p, Lit):
        return p
    if isinstance(p, Not):
        return Not(_eliminate_iff(p.child))
    if isinstance(p, And):
        return And(tuple(_eliminate_iff(c) for c in p.children))
    if isinstance(p, Or):
        return Or(tuple(_eliminate_iff(c) for c in p.children))
    if isinstance(p, Implies):
        return Implies(_eliminate_iff(p.lhs), _eliminate_iff(p.rhs))
    if isinstance(p, Iff):
        a = _eliminate_iff(p.lhs)
        b = _eliminate_iff(p.rhs)
        return And((Implies(a, b), Implies(b, a)))
    raise TypeError(type(p).__name__)


def _eliminate_implies(p: Proposition) -> Proposition:
    if isinstance(p, Lit):
        return p
    if isinstance(p, Not):
        return Not(_eliminate_implies(p.child))
    if isinstance(p, And):
        return And(tuple(_eliminate_implies(c) for c in p.children))
    if isinstance(p, Or):
        return Or(tuple(_eliminate_implies(c) for c in p.children))
    if isinstance(p, Implies):
        return Or((Not(_eliminate_implies(p.lhs)), _eliminate_implies(p.rhs)))
    raise TypeError(type(p).__name__)


def _push_not(p: Proposition, negate: bool = False) -> Proposition:
    if isinstance(p, Lit):
        return Lit(p.ind, p.negated != negate)
    if isinstance(p, Not):
        return _push_not(p.child, not negate)
    if isinstance(p, And):
        children = tuple(_push_not(c, negate) for c in p.children)
        return Or(children) if negate else And(children)
    if isinstance(p, Or):
        children = tuple(_push_not(c, negate) for c in p.children)
        return And(children) if negate else Or(children)
    raise TypeError(type(p).__name__)


def _distribute(p: Proposition) -> list[Clause]:
    if isinstance(p, Lit):
        return [frozenset((p,))]
    if isinstance(p, And):
        out: list[Clause] = []
        for ch in p.children:
            out.extend(_distribute(ch))
        return out
    if isinstance(p, Or):
        # (A & B) | C  ->  (A | C) & (B | C), applied as a clause cross product.
        acc: list[Clause] = [frozenset()]
        for ch in p.children:
            parts = _distribute(ch)
            acc = [left | right for left in acc for right in parts]
        return acc
    raise TypeError(type(p).__name__)


def to_cnf(p: Proposition) -> CnfFormula:
    """Equivalence-preserving CNF conversion."""
    q = _eliminate_iff(p)
    q = _eliminate_implies(q)
    q = _push_not(q)
    raw = _distribute(q)
    seen = set()
    kept = []
    for clause in raw:
        inds = {lit.ind for lit in clause}
        if len(inds) < len(clause):
            continue  # contains a literal and its negation: tautology
        key = _clause_key(clause)
        if key in seen:
            continue
        seen.add(key)
        kept.append(clause)
    kept.sort(key=_clause_key)
    return CnfFormula(tuple(kept))


def clause_to_linear(clause, mapping: dict[str, int], label: str = "") -> Constraint:
    """One clause as a linear row: sum of y for positive literals plus
    (1 - y) for negated ones must reach 1."""
    terms: dict[int, float] = {}
    negated = 0
    for lit in sorted(clause, key=lambda l: (l.ind, l.negated)):
        if lit.ind not in mapping:
            raise UnmappedIndicatorError(lit.ind)
        vid = mapping[lit.ind]
        if lit.negated:
            negated += 1
            terms[vid] = terms.get(vid, 0.0) - 1.0
        else:
            terms[vid] = terms.get(vid, 0.0) + 1.0
    if not label:
        label = "clause_" + "_".join(
            ("not_" + l.ind if l.negated else l.ind)
            for l in sorted(clause, key=lambda l: (l.ind, l.negated))
        )
    return Constraint(label, AffineExpr(terms), Rel.GE, 1.0 - negated)


@dataclass(frozen=True)
class Cardinality:
    """exactly/atleast/atmost `count` of the listed indicators are true.

    `count` is a nonnegative integer, or the name of another indicator, in
    which case the sum is tied to that indicator's binary (the nested-
    disjunction linkage constraint uses this form).
    """

    mode: str  # exactly | atleast | atmost
    count: int | str
    indicators: tuple[str, ...]

    def __post_init__(self):
        if self.mode not in ("exactly", "atleast", "atmost"):
            raise ValueError(f"unknown cardinality mode '{self.mode}'")
        if isinstance(self.count, int) and self.count < 0:
            raise ValueError("cardinality count must be nonnegative")
        object.__setattr__(self, "indicators", tuple(self.indicators))

    def evaluate(self, assignment: dict[str, bool]) -> bool:
        total = sum(1 for ind in self.indicators if assignment[ind])
        n = self.count if isinstance(self.count, int) else int(assignment[self.count])
        if self.mode == "exactly":
            return total == n
        if self.mode == "atleast":
            return total >= n
        return total <= n


_CARD_REL = {"exactly": Rel.EQ, "atleast": Rel.GE, "atmost": Rel.LE}


def cardinality_to_linear(card: Cardinality, mapping: dict[str, int], label: str = "") -> Constraint:
    """Cardinality as one linear row over the mapped binaries:
    exactly(n, Y) -> sum y = n, atleast -> sum y >= n, atmost -> sum y <= n."""
    terms: dict[int, float] = {}
    for ind in card.indicators:
        if ind not in mapping:
            raise UnmappedIndicatorError(ind)
        terms[mapping[ind]] = terms.get(mapping[ind], 0.0) + 1.0
    if isinstance(card.count, int):
        rhs = float(card.count)
    else:
        if card.count not in mapping:
            raise UnmappedIndicatorError(card.count)
        vid = mapping[card.count]
        terms[vid] = terms.get(vid, 0.0) - 1.0
        rhs = 0.0
    if not label:
        label = f"{card.mode}_" + "_".join(card.indicators)
    return Constraint(label, AffineExpr(terms), _CARD_REL[card.mode], rhs)
