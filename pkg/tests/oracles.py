"""Independent oracles used by the test suite.

Everything here deliberately avoids the library's compilation and solving
paths: propositions are evaluated by direct recursion, tight-M values come
from box-vertex enumeration, LP optima from brute-force vertex enumeration or
scipy's HiGHS backend, and GDP optima from enumerating logic-feasible
indicator assignments and solving each induced LP.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from gdpkit.expr import AffineExpr, Rel
from gdpkit.logic import And, Cardinality, Iff, Implies, Lit, Not, Or
from gdpkit.model import GdpModel


# -- propositional logic -------------------------------------------------------


def eval_prop(p, assignment: dict[str, bool]) -> bool:
    if isinstance(p, Lit):
        return assignment[p.ind] != p.negated
    if isinstance(p, Not):
        return not eval_prop(p.child, assignment)
    if isinstance(p, And):
        return all(eval_prop(c, assignment) for c in p.children)
    if isinstance(p, Or):
        return any(eval_prop(c, assignment) for c in p.children)
    if isinstance(p, Implies):
        return (not eval_prop(p.lhs, assignment)) or eval_prop(p.rhs, assignment)
    if isinstance(p, Iff):
        return eval_prop(p.lhs, assignment) == eval_prop(p.rhs, assignment)
    raise TypeError(type(p).__name__)


def eval_clause(clause, assignment: dict[str, bool]) -> bool:
    return any(assignment[lit.ind] != lit.negated for lit in clause)


def eval_cnf(cnf, assignment: dict[str, bool]) -> bool:
    return all(eval_clause(cl, assignment) for cl in cnf.clauses)


def all_assignments(indicators):
    indicators = sorted(indicators)
    for bits in itertools.product((False, True), repeat=len(indicators)):
        yield dict(zip(indicators, bits))


def constraint_holds(con, point: dict[int, float], tol: float = 1e-9) -> bool:
    value = con.body.evaluate(point) if isinstance(con.body, AffineExpr) else None
    assert value is not None, "oracle only handles affine constraints"
    if con.rel is Rel.LE:
        return value <= con.rhs + tol
    if con.rel is Rel.GE:
        return value >= con.rhs - tol
    return abs(value - con.rhs) <= tol


# -- vertex-enumeration LP oracle ------------------------------------------------


def vertex_lp_oracle(c, sense, rows, lo, hi, tol=1e-7):
    """Brute-force LP solve by enumerating basic points.

    `rows` is a list of (coeffs array, rel, rhs).  All variables must carry
    finite bounds so the feasible region, when nonempty, is a polytope whose
    vertices lie on n of the candidate hyperplanes.
    Returns (status, optimum) with status 'optimal' or 'infeasible'.
    """
    n = len(lo)
    planes = [(np.asarray(a, dtype=float), float(b)) for a, _rel, b in rows]
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        planes.append((e.copy(), float(lo[j])))
        planes.append((e.copy(), float(hi[j])))

    def feasible(x):
        if np.any(x < np.asarray(lo) - tol) or np.any(x > np.asarray(hi) + tol):
            return False
        for a, rel, b in rows:
            v = float(np.dot(a, x))
            if rel is Rel.LE and v > b + tol:
                return False
            if rel is Rel.GE and v < b - tol:
                return False
            if rel is Rel.EQ and abs(v - b) > tol:
                return False
        return True

    best = None
    for combo in itertools.combinations(range(len(planes)), n):
        A = np.array([planes[i][0] for i in combo])
        b = np.array([planes[i][1] for i in combo])
        try:
            x = np.linalg.solve(A, b)
        except np.linalg.LinAlgError:
            continue
        if not feasible(x):
            continue
        val = float(np.dot(c, x))
        if best is None or (sense == "max" and val > best) or (sense == "min" and val < best):
            best = val
    if best is None:
        return "infeasible", None
    return "optimal", best


def milp_relaxation_arrays(milp):
    """Extract (c, sense, rows, lo, hi) from a MilpModel for the oracle."""
    n = len(milp.variables)
    sense, obj = milp.objective
    c = np.zeros(n)
    for vid, coef in obj.terms.items():
        c[vid] = coef
    rows = []
    for row in milp.rows:
        a = np.zeros(n)
        for vid, coef in row.expr.terms.items():
            a[vid] = coef
        rows.append((a, row.rel, row.rhs - row.expr.constant))
    lo = [v.lower for v in milp.variables]
    hi = [v.upper for v in milp.variables]
    return c, sense, rows, lo, hi, obj.constant


# -- scipy LP (independent solver) ------------------------------------------------


def scipy_lp(c, sense, rows, lo, hi):
    """Solve an LP with scipy's HiGHS; returns (status, optimum, x)."""
    from scipy.optimize import linprog

    n = len(lo)
    sign = -1.0 if sense == "max" else 1.0
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for a, rel, b in rows:
        a = np.asarray(a, dtype=float)
        if rel is Rel.LE:
            A_ub.append(a)
            b_ub.append(b)
        elif rel is Rel.GE:
            A_ub.append(-a)
            b_ub.append(-b)
        else:
            A_eq.append(a)
            b_eq.append(b)
    res = linprog(
        sign * np.asarray(c, dtype=float),
        A_ub=np.array(A_ub) if A_ub else None,
        b_ub=np.array(b_ub) if b_ub else None,
        A_eq=np.array(A_eq) if A_eq else None,
        b_eq=np.array(b_eq) if b_eq else None,
        bounds=list(zip(lo, hi)),
        method="highs",
    )
    if res.status == 0:
        return "optimal", sign * res.fun, res.x
    if res.status == 2:
        return "infeasible", None, None
    if res.status == 3:
        return "unbounded", None, None
    raise RuntimeError(f"scipy linprog failed with status {res.status}")


# -- GDP enumeration oracle --------------------------------------------------------


def _oracle_selections(model: GdpModel):
    """Re-derive the effective selection constraints without the library's
    default_selections helper."""
    covered = [frozenset(c.indicators) for c in model.cardinalities]
    out = list(model.cardinalities)
    for dis in model.all_disjunctions():
        inds = frozenset(dis.indicator_names())
        if inds in covered:
            continue
        if dis.parent is None:
            out.append(Cardinality("exactly", 1, tuple(dis.indicator_names())))
        else:
            host = model._disjunction_by_name[dis.parent[0]]
            parent_ind = host.disjuncts[dis.parent[1] - 1].indicator
            out.append(Cardinality("exactly", parent_ind, tuple(dis.indicator_names())))
    return out


def _card_holds(card: Cardinality, assignment) -> bool:
    total = sum(1 for i in card.indicators if assignment[i])
    n = card.count if isinstance(card.count, int) else int(assignment[card.count])
    if card.mode == "exactly":
        return total == n
    if card.mode == "atleast":
        return total >= n
    return total <= n


def logic_feasible_assignments(model: GdpModel):
    """All indicator assignments satisfying the model's effective logic."""
    cards = _oracle_selections(model)
    out = []
    for assignment in all_assignments(model.indicator_order()):
        if not all(_card_holds(c, assignment) for c in cards):
            continue
        if not all(eval_prop(p, assignment) for _lbl, p in model.propositions):
            continue
        out.append(assignment)
    return out


def induced_lp_arrays(model: GdpModel, assignment, extra_rows=()):
    """LP data for one indicator assignment: globals plus every selected
    disjunct's constraints (nested disjuncts count when their own indicator
    is true)."""
    n = len(model.variables)
    active = list(model.global_constraints)
    for dis in model.all_disjunctions():
        for dj in dis.disjuncts:
            if assignment[dj.indicator]:
                active.extend(dj.constraints)
    rows = []
    for con in active:
        a = np.zeros(n)
        body = con.body
        for vid, coef in body.terms.items():
            a[vid] = coef
        rows.append((a, con.rel, con.rhs - body.constant))
    for coeffs, rel, rhs in extra_rows:
        a = np.zeros(n)
        for vid, coef in coeffs.items():
            a[vid] = coef
        rows.append((a, rel, rhs))
    sense, obj = model.objective
    c = np.zeros(n)
    for vid, coef in obj.terms.items():
        c[vid] = coef
    lo = [v.lower for v in model.variables]
    hi = [v.upper for v in model.variables]
    return c, sense, rows, lo, hi, obj.constant


def gdp_enumeration_oracle(model: GdpModel):
    """(status, optimum) by full enumeration over logic-feasible assignments,
    solving each induced LP with scipy."""
    sense = model.objective[0]
    best = None
    for assignment in logic_feasible_assignments(model):
        c, s, rows, lo, hi, const = induced_lp_arrays(model, assignment)
        status, val, _x = scipy_lp(c, s, rows, lo, hi)
        if status == "unbounded":
            return "unbounded", None
        if status != "optimal":
            continue
        val += const
        if best is None or (sense == "max" and val > best) or (sense == "min" and val < best):
            best = val
    if best is None:
        return "infeasible", None
    return "optimal", best
