"""Big-M and hull reformulation of validated GDP models into flat MILPs.

Nested disjunctions are handled innermost-first: an inner disjunction is
reformulated with the requested method and its emitted rows (plus any fresh
variables) become ordinary material of the enclosing disjunct, which the
outer pass then gates again.  Inner indicator binaries are plain [0, 1]
variables by the time the outer pass sees them, so interval arithmetic and
hull disaggregation treat them like any other bounded variable.  Mixing
methods between nesting levels is not supported.

Selection constraints are materialized here: a disjunction the user left
uncovered receives exactly(1, indicators) at top level, or
sum(inner) = parent indicator when nested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import MissingMError, ReformulationError, ValidationError
from .expr import (
    AffineExpr,
    Constraint,
    NlConst,
    NlExpr,
    NlProd,
    NlSum,
    Rel,
    evaluate,
    nl_from_affine,
    rename_variables,
    substitute_scaled,
)
from .interval import Interval, range_of
from .logic import cardinality_to_linear, clause_to_linear, to_cnf
from .milp import MilpModel, RowOrigin
from .model import Disjunction, GdpModel


@dataclass(frozen=True)
class MSpec:
    """Big-M sizing policy: interval arithmetic per constraint (auto), one
    global scalar, per-disjunct values keyed by indicator, or per-constraint
    values keyed by label.  Partial tables fall back to interval arithmetic
    for affine constraints."""

    kind: str  # auto | global | per_disjunct | per_constraint
    value: float | None = None
    table: dict | None = None

    def __post_init__(self):
        if self.kind not in ("auto", "global", "per_disjunct", "per_constraint"):
            raise ReformulationError(f"unknown MSpec kind '{self.kind}'")
        if self.value is not None and self.value < 0:
            raise ReformulationError("big-M values must be nonnegative")
        if self.table:
            for key, m in self.table.items():
                if m < 0:
                    raise ReformulationError(f"big-M for '{key}' must be nonnegative")

    @classmethod
    def auto(cls) -> "MSpec":
        return cls("auto")

    @classmethod
    def uniform(cls, m: float) -> "MSpec":
        return cls("global", value=float(m))

    @classmethod
    def per_disjunct(cls, table: dict[str, float]) -> "MSpec":
        return cls("per_disjunct", table=dict(table))

    @classmethod
    def per_constraint(cls, table: dict[str, float]) -> "MSpec":
        return cls("per_constraint", table=dict(table))

    def lookup(self, indicator: str, label: str) -> float | None:
        if self.kind == "global":
            return self.value
        if self.kind == "per_disjunct" and self.table is not None:
            return self.table.get(indicator)
        if self.kind == "per_constraint" and self.table is not None:
            return self.table.get(label)
        return None


@dataclass
class HullArtifacts:
    """Bookkeeping from a hull reformulation: (original variable id, disjunct
    indicator) -> disaggregated MILP variable id, plus the epsilon used for
    perspective rows."""

    disaggregated: dict[tuple[int, str], int]
    epsilon: float


def perspective_epsilon(h: NlExpr, y: int, disagg: dict[int, int], epsilon: float) -> NlExpr:
    """Epsilon-approximate perspective of `h(x) <= 0` for one disjunct.

    Emits ((1-eps) y + eps) * h(x_i / ((1-eps) y + eps)) - eps h(0) (1 - y),
    where x_i are the disaggregated copies given by `disagg`.  The row value
    equals h(x_i) at y = 1 and vanishes at (y = 0, x_i = 0).
    """
    if not (0.0 < epsilon < 1.0):
        raise ReformulationError(f"epsilon must lie in (0, 1), got {epsilon}")
    sigma = AffineExpr({y: 1.0 - epsilon}, epsilon)
    h_at_zero = evaluate(h, {v: 0.0 for v in h.variables()})
    renamed = rename_variables(h, disagg)
    main = NlProd((nl_from_affine(sigma), substitute_scaled(renamed, sigma)))
    if h_at_zero == 0.0:
        return main
    correction = NlProd(
        (NlConst(-epsilon * h_at_zero), nl_from_affine(AffineExpr({y: -1.0}, 1.0)))
    )
    return NlSum((main, correction))


def reformulate_bigm(model: GdpModel, mspec: MSpec | None = None) -> MilpModel:
    """Big-M reformulation: each gated `body <= rhs` becomes
    `body <= rhs + M (1 - y)`; >= rows flip the slack sign and equalities
    split into two one-sided rows with independent M values."""
    return _Reformulator(model, "bigm", mspec or MSpec.auto(), 1e-4).run()


def reformulate_hull(model: GdpModel, epsilon: float = 1e-4) -> MilpModel:
    """Hull reformulation: per-disjunct variable copies with y-scaled bounds
    and rows, aggregation rows tying the copies back to the originals, and
    epsilon-perspective rows for nonlinear constraints."""
    if not (0.0 < epsilon < 1.0):
        raise ReformulationError(f"epsilon must lie in (0, 1), got {epsilon}")
    return _Reformulator(model, "hull", MSpec.auto(), epsilon).run()


# One gated constraint on its way to the flat model: the nesting path holds
# (disjunction, indicator) pairs outermost-first.
@dataclass
class _Pending:
    con: Constraint
    path: tuple[tuple[str, str], ...]
    kind: str  # disjunct | linkage


class _Reformulator:
    def __init__(self, model: GdpModel, method: str, mspec: MSpec, epsilon: float):
        self.model = model
        self.method = method
        self.mspec = mspec
        self.epsilon = epsilon
        self.milp = MilpModel(model.name)
        self.box: dict[int, Interval] = {}
        self.hull = HullArtifacts({}, epsilon)

    def run(self) -> MilpModel:
        diags = self.model.validate()
        if diags:
            raise ValidationError(diags)
        milp, model = self.milp, self.model

        for v in model.variables:
            milp.add_variable(v.name, v.lower, v.upper)
            self.box[v.id] = Interval(v.lower, v.upper)
        for ind in model.indicator_order():
            vid = milp.add_variable(ind, 0.0, 1.0, binary=True)
            milp.indicator_to_var[ind] = vid
            self.box[vid] = Interval(0.0, 1.0)

        for con in model.global_constraints:
            if isinstance(con.body, AffineExpr):
                milp.add_row(con.label, con.body, con.rel, con.rhs, RowOrigin("global"))
            else:
                milp.add_nl_row(con.label, con.body, con.rel, con.rhs, RowOrigin("global"))

        for dis in model.disjunctions:
            for pending in self._gate_disjunction(dis):
                origin = RowOrigin(pending.kind, pending.path)
                con = pending.con
                if isinstance(con.body, AffineExpr):
                    milp.add_row(con.label, con.body, con.rel, con.rhs, origin)
                else:
                    milp.add_nl_row(con.label, con.body, con.rel, con.rhs, origin)

        imap = milp.indicator_to_var
        for card in model.cardinalities:
            row = cardinality_to_linear(card, imap)
            kind = "linkage" if isinstance(card.count, str) else "logic"
            milp.add_row(row.label, row.body, row.rel, row.rhs, RowOrigin(kind))
        for card in model.default_selections():
            row = cardinality_to_linear(card, imap)
            kind = "linkage" if isinstance(card.count, str) else "logic"
            milp.add_row(row.label, row.body, row.rel, row.rhs, RowOrigin(kind))
        for label, prop in model.propositions:
            cnf = to_cnf(prop)
            for j, clause in enumerate(cnf.clauses, start=1):
                row = clause_to_linear(clause, imap, label=f"{label}_{j}")
                milp.add_row(row.label, row.body, row.rel, row.rhs, RowOrigin("logic"))

        sense, obj = model.objective
        milp.set_objective(sense, obj)
        if self.method == "hull":
            milp.hull = self.hull
        return milp

    # -- recursive gating ------------------------------------------------------

    def _gate_disjunction(self, dis: Disjunction) -> list[_Pending]:
        per_disjunct: list[list[_Pending]] = []
        for dj in dis.disjuncts:
            pend = [_Pending(c, (), "disjunct") for c in dj.constraints]
            for inner in dj.nested:
                pend.extend(self._gate_disjunction(inner))
            per_disjunct.append(pend)

        if self.method == "bigm":
            out: list[_Pending] = []
            for dj, pend in zip(dis.disjuncts, per_disjunct):
                y = self.milp.indicator_to_var[dj.indicator]
                hop = (dis.name, dj.indicator)
                for p in pend:
                    for row in self._bigm_rows(p.con, y, dj.indicator):
                        out.append(_Pending(row, (hop,) + p.path, "disjunct"))
            return out
        return self._hull_rows(dis, per_disjunct)

    # -- big-M -----------------------------------------------------------------

    def _resolve_m(self, con: Constraint, indicator: str, side: Rel) -> float:
        explicit = self.mspec.lookup(indicator, con.label)
        if explicit is not None:
            return explicit
        if not con.is_affine():
            raise MissingMError(
                f"nonlinear constraint '{con.label}' in disjunct '{indicator}' needs an "
                f"explicit big-M value (per-constraint, per-disjunct, or global)"
            )
        body = con.affine_body()
        rng = range_of(body, self.box)
        if side is Rel.LE:
            m = rng.hi - con.rhs
        else:
            m = con.rhs - rng.lo
        if not math.isfinite(m):
            raise MissingMError(
                f"constraint '{con.label}' ranges over an unbounded box; "
                f"supply an explicit big-M value"
            )
        return max(0.0, m)

    def _bigm_rows(self, con: Constraint, y: int, indicator: str) -> list[Constraint]:
        rows = []
        affine = isinstance(con.body, AffineExpr)
        if con.rel in (Rel.LE, Rel.EQ):
            m = self._resolve_m(con, indicator, Rel.LE)
            label = con.label if con.rel is Rel.LE else f"{con.label}_le"
            if affine:
                body = con.body + AffineExpr({y: m})
            else:
                body = NlSum((con.body, NlProd((NlConst(m), nl_from_affine(AffineExpr({y: 1.0}))))))
            rows.append(Constraint(label, body, Rel.LE, con.rhs + m))
        if con.rel in (Rel.GE, Rel.EQ):
            m = self._resolve_m(con, indicator, Rel.GE)
            label = con.label if con.rel is Rel.GE else f"{con.label}_ge"
            if affine:
                body = con.body + AffineExpr({y: -m})
            else:
                body = NlSum((con.body, NlProd((NlConst(-m), nl_from_affine(AffineExpr({y: 1.0}))))))
            rows.append(Constraint(label, body, Rel.GE, con.rhs - m))
        return rows

    # -- hull ------------------------------------------------------------------

    def _hull_rows(self, dis: Disjunction, per_disjunct: list[list[_Pending]]) -> list[_Pending]:
        milp = self.milp
        shared: set[int] = set()
        for pend in per_disjunct:
            for p in pend:
                shared |= p.con.variables()
        ordered = sorted(shared)

        out: list[_Pending] = []
        copies_per_disjunct: list[dict[int, int]] = []
        for pos, (dj, pend) in enumerate(zip(dis.disjuncts, per_disjunct), start=1):
            y = milp.indicator_to_var[dj.indicator]
            hop = (dis.name, dj.indicator)
            copies: dict[int, int] = {}
            for vid in ordered:
                src = milp.variables[vid]
                if not (math.isfinite(src.lower) and math.isfinite(src.upper)):
                    raise ReformulationError(
                        f"variable '{src.name}' inside disjunction '{dis.name}' has "
                        f"unbounded domain; hull disaggregation needs finite bounds"
                    )
                name = f"{src.name}__{dis.name}__{pos}"
                cid = milp.add_variable(name, min(src.lower, 0.0), max(src.upper, 0.0))
                self.box[cid] = Interval(min(src.lower, 0.0), max(src.upper, 0.0))
                copies[vid] = cid
                self.hull.disaggregated[(vid, dj.indicator)] = cid
                # L y <= x_i <= U y  (forces the copy to zero when unselected)
                out.append(
                    _Pending(
                        Constraint(f"{name}_ub", AffineExpr({cid: 1.0, y: -src.upper}), Rel.LE, 0.0),
                        (hop,),
                        "disjunct",
                    )
                )
                out.append(
                    _Pending(
                        Constraint(f"{name}_lb", AffineExpr({cid: 1.0, y: -src.lower}), Rel.GE, 0.0),
                        (hop,),
                        "disjunct",
                    )
                )
            copies_per_disjunct.append(copies)

            for p in pend:
                con = p.con
                if isinstance(con.body, AffineExpr):
                    # a.x + c REL rhs  ->  a.x_i + (c - rhs) y REL 0
                    renamed = rename_variables(con.body, copies)
                    terms = dict(renamed.terms)
                    shift = renamed.constant - con.rhs
                    if shift != 0.0:
                        terms[y] = terms.get(y, 0.0) + shift
                    rows = [Constraint(con.label, AffineExpr(terms), con.rel, 0.0)]
                else:
                    rows = self._perspective_rows(con, y, copies)
                for row in rows:
                    out.append(_Pending(row, (hop,) + p.path, "disjunct"))

        # x = sum_i x_i  (aggregation, Eq. pattern "x = x_1 + x_2")
        for vid in ordered:
            terms = {vid: 1.0}
            for copies in copies_per_disjunct:
                terms[copies[vid]] = -1.0
            label = f"agg_{milp.variables[vid].name}__{dis.name}"
            out.append(_Pending(Constraint(label, AffineExpr(terms), Rel.EQ, 0.0), (), "linkage"))
        return out

    def _perspective_rows(self, con: Constraint, y: int, copies: dict[int, int]) -> list[Constraint]:
        rows = []
        if con.rel in (Rel.LE, Rel.EQ):
            h = con.body if con.rhs == 0.0 else NlSum((con.body, NlConst(-con.rhs)))
            label = con.label if con.rel is Rel.LE else f"{con.label}_le"
            rows.append(
                Constraint(label, perspective_epsilon(h, y, copies, self.epsilon), Rel.LE, 0.0)
            )
        if con.rel in (Rel.GE, Rel.EQ):
            h = NlSum((NlConst(con.rhs), NlProd((NlConst(-1.0), con.body))))
            label = con.label if con.rel is Rel.GE else f"{con.label}_ge"
            rows.append(
                Constraint(label, perspective_epsilon(h, y, copies, self.epsilon), Rel.LE, 0.0)
            )
        return rows
