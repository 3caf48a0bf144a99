"""User-facing GDP model container.

A :class:`GdpModel` collects continuous variables, global constraints,
disjunction trees gated by Boolean indicators, logic constraints over those
indicators, and an affine objective.  Construction is single-threaded; once
validated, a model is treated as immutable and may be shared freely by the
reformulation and solver layers.

Selection semantics: a disjunction with no user-supplied selection constraint
receives a default on reformulation -- exactly(1, indicators) for a top-level
disjunction, and sum(inner indicators) = parent indicator for a nested one.
A user cardinality whose indicator set equals the disjunction's indicator set
overrides the default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ModelError
from .expr import AffineExpr, Constraint, NlExpr, Rel, VariableRef, linearity_of
from .logic import Cardinality, Proposition


@dataclass
class Disjunct:
    """One alternative of a disjunction: constraints that apply when the
    indicator is true, plus any nested disjunctions."""

    indicator: str
    constraints: list[Constraint]
    nested: list["Disjunction"] = field(default_factory=list)


@dataclass
class Disjunction:
    name: str
    disjuncts: list[Disjunct]
    parent: tuple[str, int] | None = None  # (disjunction name, 1-based disjunct index)

    def indicator_names(self) -> list[str]:
        return [d.indicator for d in self.disjuncts]


@dataclass(frozen=True)
class IndicatorDecl:
    name: str
    owner: tuple[str, int]  # (disjunction name, 1-based position)


class GdpModel:
    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: list[VariableRef] = []
        self.global_constraints: list[Constraint] = []
        self.disjunctions: list[Disjunction] = []  # top level only
        self.propositions: list[tuple[str, Proposition]] = []
        self.cardinalities: list[Cardinality] = []
        self.objective: tuple[str, AffineExpr] | None = None
        self.indicators: dict[str, IndicatorDecl] = {}
        self._var_by_name: dict[str, int] = {}
        self._disjunction_by_name: dict[str, Disjunction] = {}

    # -- construction --------------------------------------------------------

    def add_variable(self, name: str, lower: float, upper: float) -> VariableRef:
        if name in self._var_by_name:
            raise ModelError(f"duplicate variable name '{name}'")
        if lower > upper:
            raise ModelError(f"variable '{name}': lower bound {lower} exceeds upper {upper}")
        ref = VariableRef(len(self.variables), name, float(lower), float(upper))
        self.variables.append(ref)
        self._var_by_name[name] = ref.id
        return ref

    def variable(self, name: str) -> VariableRef:
        try:
            return self.variables[self._var_by_name[name]]
        except KeyError:
            raise ModelError(f"unknown variable '{name}'") from None

    def add_constraint(self, label: str, body, rel: Rel, rhs: float) -> Constraint:
        """Add a global constraint."""
        con = self._make_constraint(label, body, rel, rhs)
        self.global_constraints.append(con)
        return con

    def _make_constraint(self, label, body, rel, rhs) -> Constraint:
        if isinstance(body, VariableRef):
            body = body + 0.0
        if not isinstance(body, (AffineExpr, NlExpr)):
            raise ModelError(f"constraint '{label}': body must be an expression")
        con = Constraint(label, body, rel, float(rhs))
        for vid in con.variables():
            if not (0 <= vid < len(self.variables)):
                raise ModelError(f"constraint '{label}' references undeclared variable id {vid}")
        return con

    def constraint(self, label: str, body, rel: Rel, rhs: float) -> Constraint:
        """Build (and check) a constraint without adding it anywhere; used to
        assemble disjunct constraint lists."""
        return self._make_constraint(label, body, rel, rhs)

    def add_disjunction(
        self,
        name: str,
        disjuncts,
        parent: tuple[str, int] | None = None,
        indicator_names: list[str] | None = None,
    ) -> Disjunction:
        """Add a disjunction with one fresh indicator per disjunct.

        Each element of `disjuncts` is either a list of constraints, or a pair
        (constraints, nested) where `nested` lists previously added
        disjunctions to re-parent inside that disjunct.  `parent` attaches the
        whole disjunction inside an existing disjunct instead, which is how
        the model-file format declares nesting.
        """
        if name in self._disjunction_by_name:
            raise ModelError(f"duplicate disjunction name '{name}'")
        if len(disjuncts) < 2:
            raise ModelError(f"disjunction '{name}' needs at least 2 disjuncts")
        if indicator_names is not None and len(indicator_names) != len(disjuncts):
            raise ModelError(f"disjunction '{name}': one indicator name per disjunct required")

        built: list[Disjunct] = []
        for pos, spec in enumerate(disjuncts, start=1):
            if isinstance(spec, tuple):
                constraints, nested = spec
            else:
                constraints, nested = spec, []
            ind = indicator_names[pos - 1] if indicator_names else f"Y_{name}_{pos}"
            if ind in self.indicators:
                raise ModelError(f"duplicate indicator name '{ind}'")
            if ind in self._var_by_name:
                raise ModelError(f"indicator '{ind}' collides with a variable name")
            self.indicators[ind] = IndicatorDecl(ind, (name, pos))
            cons = [self._check_owned(c, name) for c in constraints]
            dj = Disjunct(ind, cons, [])
            for inner in nested:
                self._reparent(inner, name, pos, dj)
            built.append(dj)

        dis = Disjunction(name, built, parent)
        self._disjunction_by_name[name] = dis
        if parent is None:
            self.disjunctions.append(dis)
        else:
            host = self._find_disjunct(parent)
            host.nested.append(dis)
        return dis

    def _check_owned(self, con: Constraint, where: str) -> Constraint:
        for vid in con.variables():
            if not (0 <= vid < len(self.variables)):
                raise ModelError(
                    f"disjunction '{where}': constraint '{con.label}' references "
                    f"undeclared variable id {vid}"
                )
        return con

    def _reparent(self, inner: Disjunction, name: str, pos: int, host: Disjunct):
        if inner.name not in self._disjunction_by_name:
            raise ModelError(f"nested disjunction '{inner.name}' was never added to this model")
        if inner.parent is not None:
            raise ModelError(f"disjunction '{inner.name}' already has a parent")
        if inner in self.disjunctions:
            self.disjunctions.remove(inner)
        inner.parent = (name, pos)
        host.nested.append(inner)

    def _find_disjunct(self, key: tuple[str, int]) -> Disjunct:
        dname, pos = key
        dis = self._disjunction_by_name.get(dname)
        if dis is None:
            raise ModelError(f"unknown parent disjunction '{dname}'")
        if not (1 <= pos <= len(dis.disjuncts)):
            raise ModelError(f"parent '{dname}/{pos}': disjunct index out of range")
        return dis.disjuncts[pos - 1]

    def add_proposition(self, p: Proposition, label: str = "") -> None:
        for ind in p.indicators():
            if ind not in self.indicators:
                raise ModelError(f"proposition references unknown indicator '{ind}'")
        if not label:
            label = f"prop_{len(self.propositions) + 1}"
        self.propositions.append((label, p))

    def choose(self, count: int | str, indicators, mode: str = "exactly") -> Cardinality:
        """Constrain how many of the listed indicators are true.  `count` may
        be another indicator's name, tying the sum to that indicator."""
        card = Cardinality(mode, count, tuple(indicators))
        for ind in card.indicators:
            if ind not in self.indicators:
                raise ModelError(f"cardinality references unknown indicator '{ind}'")
        if isinstance(count, str) and count not in self.indicators:
            raise ModelError(f"cardinality count references unknown indicator '{count}'")
        self.cardinalities.append(card)
        return card

    def set_objective(self, sense: str, expr) -> None:
        if sense not in ("min", "max"):
            raise ModelError(f"objective sense must be 'min' or 'max', got '{sense}'")
        if isinstance(expr, VariableRef):
            expr = expr + 0.0
        if not isinstance(expr, AffineExpr):
            raise ModelError("objective must be affine")
        for vid in expr.variables():
            if not (0 <= vid < len(self.variables)):
                raise ModelError(f"objective references undeclared variable id {vid}")
        self.objective = (sense, expr)

    # -- structure queries ----------------------------------------------------

    def all_disjunctions(self) -> list[Disjunction]:
        """Every disjunction, parents before their nested children."""
        out: list[Disjunction] = []

        def walk(dis: Disjunction):
            out.append(dis)
            for dj in dis.disjuncts:
                for inner in dj.nested:
                    walk(inner)

        for dis in self.disjunctions:
            walk(dis)
        return out

    def indicator_order(self) -> list[str]:
        return list(self.indicators)

    def disjunct_variables(self, dis: Disjunction) -> set[int]:
        """Variable ids referenced anywhere inside a disjunction's own
        constraints (not inside nested disjunctions)."""
        out: set[int] = set()
        for dj in dis.disjuncts:
            for con in dj.constraints:
                out |= con.variables()
        return out

    def default_selections(self) -> list[Cardinality]:
        """Selection constraints reformulation will add for disjunctions the
        user left uncovered."""
        covered = [frozenset(c.indicators) for c in self.cardinalities]
        out = []
        for dis in self.all_disjunctions():
            inds = frozenset(dis.indicator_names())
            if inds in covered:
                continue
            if dis.parent is None:
                out.append(Cardinality("exactly", 1, tuple(dis.indicator_names())))
            else:
                host = self._disjunction_by_name[dis.parent[0]]
                parent_ind = host.disjuncts[dis.parent[1] - 1].indicator
                out.append(Cardinality("exactly", parent_ind, tuple(dis.indicator_names())))
        return out

    # -- validation -----------------------------------------------------------

    def validate(self) -> list[str]:
        """Structural diagnostics; an empty list means the model is ready for
        reformulation."""
        diags: list[str] = []
        seen: dict[str, str] = {}
        for dis in self.all_disjunctions():
            local = set()
            for dj in dis.disjuncts:
                if dj.indicator in local:
                    diags.append(
                        f"indicator '{dj.indicator}' appears twice in disjunction '{dis.name}'"
                    )
                local.add(dj.indicator)
                if dj.indicator in seen and seen[dj.indicator] != dis.name:
                    diags.append(
                        f"indicator '{dj.indicator}' is reused across disjunctions "
                        f"'{seen[dj.indicator]}' and '{dis.name}'"
                    )
                seen[dj.indicator] = dis.name
                for con in dj.constraints:
                    for vid in sorted(con.variables()):
                        ref = self.variables[vid]
                        if not (math.isfinite(ref.lower) and math.isfinite(ref.upper)):
                            diags.append(
                                f"variable '{ref.name}' appears in disjunct "
                                f"'{dj.indicator}' but has unbounded domain "
                                f"[{ref.lower}, {ref.upper}]"
                            )
        for ind in self.indicators:
            if ind not in seen:
                diags.append(f"indicator '{ind}' is declared but owned by no disjunct")
        for card in self.cardinalities:
            for ind in card.indicators:
                if ind not in self.indicators:
                    diags.append(f"cardinality references unknown indicator '{ind}'")
            if isinstance(card.count, str) and card.count not in self.indicators:
                diags.append(f"cardinality count references unknown indicator '{card.count}'")
            if isinstance(card.count, int) and card.count > len(card.indicators):
                diags.append(
                    f"cardinality {card.mode}({card.count}) over {len(card.indicators)} "
                    f"indicator(s) can never hold"
                )
        for label, prop in self.propositions:
            for ind in prop.indicators():
                if ind not in self.indicators:
                    diags.append(f"proposition '{label}' references unknown indicator '{ind}'")
        if self.objective is None:
            diags.append("model has no objective")
        elif linearity_of(self.objective[1]) != "affine":
            diags.append("objective must be affine")
        # deduplicate repeated unbounded-variable findings, preserving order
        unique: list[str] = []
        for d in diags:
            if d not in unique:
                unique.append(d)
        return unique
