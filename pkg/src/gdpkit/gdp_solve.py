"""GDP-aware solution algorithms driving the embedded MILP engine.

Disjunctive branch and bound branches on indicators instead of rounding
binaries: fixing an indicator true lifts its disjunct's constraints into the
global set (no big-M slack remains), fixing it false deletes the disjunct
from its disjunction, and the node is re-reformulated before its continuous
relaxation is solved.  Logic consistency of every node's fixings is
maintained by clause/cardinality propagation.

The hybrid cutting-plane loop tightens the big-M relaxation with supporting
inequalities derived from the hull relaxation: a separation LP finds the
L-infinity-closest hull point to the big-M relaxation optimum, the candidate
normal is the difference vector, and the cut's right-hand side is lifted to
the hull support value in that direction so the cut can never trim any point
of the hull relaxation.
"""

from __future__ import annotations

import heapq
import math
import threading
from dataclasses import dataclass, field

from .errors import NonlinearConstraintError, SolveError, ValidationError
from .expr import AffineExpr, Rel
from .logic import Cardinality, Or, to_cnf
from .milp import INFEASIBLE, OPTIMAL, UNBOUNDED, MilpModel, MipSolution, RowOrigin, solve_lp, solve_mip
from .model import Disjunct, Disjunction, GdpModel
from .reformulate import MSpec, reformulate_bigm, reformulate_hull

_INT_TOL = 1e-6
_CUT_TOL = 1e-7


@dataclass
class DbbNode:
    """One open node of the disjunctive search tree; `fixed` is the
    propagation closure of all branching decisions on the path."""

    fixed: dict[str, bool]
    bound: float
    depth: int
    id: int


@dataclass
class Cut:
    """A valid inequality expr <= rhs for the hull relaxation, violated by the
    big-M relaxation point it was separated from."""

    expr: AffineExpr
    rhs: float
    source_point: dict[str, float]
    names: dict[int, str] = field(default_factory=dict)

    def by_name(self) -> dict[str, float]:
        return {self.names[vid]: coef for vid, coef in self.expr.terms.items()}


# -- logic propagation ---------------------------------------------------------


def _propagate(fixed: dict[str, bool], clauses, cards) -> dict[str, bool] | None:
    """Closure of a partial indicator assignment under unit propagation and
    cardinality counting; None when a clause or cardinality is violated."""
    out = dict(fixed)
    changed = True
    while changed:
        changed = False
        for clause in clauses:
            open_lits = []
            satisfied = False
            for lit in clause:
                if lit.ind in out:
                    if out[lit.ind] != lit.negated:
                        satisfied = True
                        break
                else:
                    open_lits.append(lit)
            if satisfied:
                continue
            if not open_lits:
                return None
            if len(open_lits) == 1:
                lit = open_lits[0]
                out[lit.ind] = not lit.negated
                changed = True
        for card in cards:
            t = sum(1 for i in card.indicators if out.get(i) is True)
            unknown = [i for i in card.indicators if i not in out]
            r = len(unknown)
            if isinstance(card.count, str):
                n = int(out[card.count]) if card.count in out else None
            else:
                n = card.count
            if n is not None:
                if card.mode == "exactly":
                    if t > n or t + r < n:
                        return None
                    if r and t == n:
                        for i in unknown:
                            out[i] = False
                        changed = True
                    elif r and t + r == n:
                        for i in unknown:
                            out[i] = True
                        changed = True
                elif card.mode == "atleast":
                    if t + r < n:
                        return None
                    if r and t + r == n:
                        for i in unknown:
                            out[i] = True
                        changed = True
                else:  # atmost
                    if t > n:
                        return None
                    if r and t == n:
                        for i in unknown:
                            out[i] = False
                        changed = True
            else:
                # the count is an indicator whose value is still open
                if card.mode == "exactly":
                    if t > 1:
                        return None
                    if t == 1:
                        out[card.count] = True
                        for i in unknown:
                            out[i] = False
                        changed = True
                    elif r == 0:
                        out[card.count] = False
                        changed = True
                elif card.mode == "atleast":
                    if t + r == 0:
                        out[card.count] = False
                        changed = True
                else:  # atmost: any true member forces the count indicator
                    if t >= 1:
                        out[card.count] = True
                        changed = True
    return out


def _transform_cards(cards, fixed) -> list[Cardinality] | None:
    out = []
    for card in cards:
        unfixed = tuple(i for i in card.indicators if i not in fixed)
        t = sum(1 for i in card.indicators if fixed.get(i) is True)
        if isinstance(card.count, str) and card.count not in fixed:
            if card.mode == "atleast" and t >= 1:
                continue  # sum >= t >= 1 >= count always holds
            out.append(Cardinality(card.mode, card.count, unfixed))
            continue
        n = (int(fixed[card.count]) if isinstance(card.count, str) else card.count) - t
        if card.mode == "exactly":
            if n < 0 or n > len(unfixed):
                return None
            if unfixed:
                out.append(Cardinality("exactly", n, unfixed))
            elif n != 0:
                return None
        elif card.mode == "atleast":
            if n > len(unfixed):
                return None
            if unfixed:
                out.append(Cardinality("atleast", max(0, n), unfixed))
            elif n > 0:
                return None
        else:
            if n < 0:
                return None
            if unfixed:
                out.append(Cardinality("atmost", min(n, len(unfixed)), unfixed))
    return out


def _transform_clauses(clauses, fixed):
    out = []
    for clause in clauses:
        lits = []
        satisfied = False
        for lit in clause:
            if lit.ind in fixed:
                if fixed[lit.ind] != lit.negated:
                    satisfied = True
                    break
            else:
                lits.append(lit)
        if satisfied:
            continue
        if not lits:
            return None
        out.append(frozenset(lits))
    return out


# -- node model construction -----------------------------------------------------


def _node_model(base: GdpModel, clauses, cards, fixed: dict[str, bool]) -> GdpModel | None:
    nm = GdpModel(base.name)
    nm.variables = base.variables
    nm._var_by_name = base._var_by_name
    nm.objective = base.objective
    nm.global_constraints = list(base.global_constraints)

    def rebuild(dis: Disjunction):
        """-> (rebuilt disjunction or None, lifted constraints, promoted disjunctions)."""
        kept = []
        lifted = []
        promoted = []
        for dj in dis.disjuncts:
            val = fixed.get(dj.indicator)
            if val is False:
                continue
            inner_results = [rebuild(inner) for inner in dj.nested]
            if val is True:
                lifted.extend(dj.constraints)
                for sub, sub_lifted, sub_promoted in inner_results:
                    lifted.extend(sub_lifted)
                    promoted.extend(sub_promoted)
                    if sub is not None:
                        promoted.append(sub)
            else:
                cons = list(dj.constraints)
                nested_kept = []
                for sub, sub_lifted, sub_promoted in inner_results:
                    cons.extend(sub_lifted)
                    nested_kept.extend(sub_promoted)
                    if sub is not None:
                        nested_kept.append(sub)
                kept.append(Disjunct(dj.indicator, cons, nested_kept))
        rebuilt = Disjunction(dis.name, kept, dis.parent) if kept else None
        return rebuilt, lifted, promoted

    for dis in base.disjunctions:
        rebuilt, lifted, promoted = rebuild(dis)
        nm.global_constraints.extend(lifted)
        for sub in promoted:
            sub.parent = None
            nm.disjunctions.append(sub)
            nm._disjunction_by_name[sub.name] = sub
        if rebuilt is not None:
            nm.disjunctions.append(rebuilt)
            nm._disjunction_by_name[rebuilt.name] = rebuilt

    for dis in nm.all_disjunctions():
        for dj in dis.disjuncts:
            nm.indicators[dj.indicator] = base.indicators[dj.indicator]

    node_cards = _transform_cards(cards, fixed)
    if node_cards is None:
        return None
    nm.cardinalities = node_cards
    node_clauses = _transform_clauses(clauses, fixed)
    if node_clauses is None:
        return None
    for j, clause in enumerate(node_clauses, start=1):
        lits = sorted(clause, key=lambda l: (l.ind, l.negated))
        prop = lits[0] if len(lits) == 1 else Or(tuple(lits))
        nm.propositions.append((f"node_clause_{j}", prop))
    return nm


def _require_linear(model: GdpModel, what: str):
    for con in model.global_constraints:
        if not isinstance(con.body, AffineExpr):
            raise NonlinearConstraintError(f"{what} handles linear GDPs only ('{con.label}')")
    for dis in model.all_disjunctions():
        for dj in dis.disjuncts:
            for con in dj.constraints:
                if not isinstance(con.body, AffineExpr):
                    raise NonlinearConstraintError(
                        f"{what} handles linear GDPs only ('{con.label}')"
                    )


def _reformulate(model, method, mspec, epsilon):
    if method == "bigm":
        return reformulate_bigm(model, mspec)
    return reformulate_hull(model, epsilon)


def _append_cuts(milp: MilpModel, cuts, fixed: dict[str, bool]):
    for i, cut in enumerate(cuts, start=1):
        terms = {}
        rhs = cut.rhs
        for name, coef in cut.by_name().items():
            if name in milp._by_name:
                terms[milp.var_id(name)] = coef
            elif name in fixed:
                rhs -= coef * (1.0 if fixed[name] else 0.0)
            else:
                raise SolveError(f"cut references unknown name '{name}'")
        milp.add_row(f"cut_{i}", AffineExpr(terms), Rel.LE, rhs, RowOrigin("cut"))


# -- disjunctive branch and bound -------------------------------------------------


def solve_disjunctive_bb(
    model: GdpModel,
    method: str = "bigm",
    mspec: MSpec | None = None,
    epsilon: float = 1e-4,
    gap_tol: float = 1e-9,
    workers: int = 1,
    log: bool = False,
    extra_cuts=None,
) -> MipSolution:
    """Branch and bound over disjunct selection (linear GDPs only).

    Each node re-reformulates the model with its fixings applied; branching
    picks the unfixed indicator whose relaxation value is closest to 1, ties
    broken by declaration order.  Node selection is best-bound.
    """
    _require_linear(model, "disjunctive branch and bound")
    diags = model.validate()
    if diags:
        raise ValidationError(diags)
    mspec = mspec or MSpec.auto()
    extra_cuts = extra_cuts or []

    cards = list(model.cardinalities) + model.default_selections()
    clauses = []
    for _label, prop in model.propositions:
        clauses.extend(to_cnf(prop).clauses)
    order = model.indicator_order()

    state = _DbbState(model.objective[0] == "max")
    root_fixed = _propagate({}, clauses, cards)
    if root_fixed is None:
        return MipSolution(INFEASIBLE, {}, None, None, 0, 0)
    with state.cv:
        state.push(DbbNode(root_fixed, math.inf if state.maximize else -math.inf, 0, 0))

    def evaluate_node(node: DbbNode):
        nm = _node_model(model, clauses, cards, node.fixed)
        if nm is None:
            return ("logic-infeasible", None, None)
        milp = _reformulate(nm, method, mspec, epsilon)
        if extra_cuts:
            _append_cuts(milp, extra_cuts, node.fixed)
        rel = solve_lp(milp)
        return ("lp", rel, nm)

    def completion_value(full_fixed):
        nm = _node_model(model, clauses, cards, full_fixed)
        if nm is None:
            return None
        milp = _reformulate(nm, method, mspec, epsilon)
        if extra_cuts:
            _append_cuts(milp, extra_cuts, full_fixed)
        rel = solve_lp(milp)
        if rel.status != OPTIMAL:
            return None
        return rel

    def worker():
        while True:
            with state.cv:
                while not state.heap and state.in_flight > 0 and state.failure is None:
                    state.cv.wait()
                if state.failure is not None or not state.heap:
                    return
                node = state.pop()
                if state.pruned_by_bound(node.bound, gap_tol):
                    state.note(node, "pruned-bound", log)
                    continue
                state.in_flight += 1
            try:
                kind, rel, nm = evaluate_node(node)
            except Exception as exc:
                with state.cv:
                    state.failure = exc
                    state.in_flight -= 1
                    state.cv.notify_all()
                return
            with state.cv:
                state.in_flight -= 1
                state.nodes += 1
                if kind == "logic-infeasible" or rel.status == INFEASIBLE:
                    state.note(node, "pruned-infeasible", log)
                    state.cv.notify_all()
                    continue
                if rel.status == UNBOUNDED:
                    if node.depth == 0:
                        state.unbounded = True
                        state.heap.clear()
                    else:
                        state.failure = SolveError("node relaxation unbounded below root")
                    state.cv.notify_all()
                    continue
                state.iterations += rel.iterations
                bound = rel.objective
                if state.pruned_by_bound(bound, gap_tol):
                    state.note(node, "pruned-bound", log)
                    state.cv.notify_all()
                    continue
                unfixed = [ind for ind in order if ind not in node.fixed]
                fractional = [
                    ind for ind in unfixed if min(rel.point[ind], 1.0 - rel.point[ind]) > _INT_TOL
                ]
                if not fractional:
                    full = dict(node.fixed)
                    for ind in unfixed:
                        full[ind] = rel.point[ind] > 0.5
                    comp = completion_value(full)
                    if comp is not None:
                        obj = comp.objective
                        point = {v.name: comp.point[v.name] for v in model.variables}
                    else:  # fall back to the relaxation point
                        obj = bound
                        point = {v.name: rel.point[v.name] for v in model.variables}
                    for ind in order:
                        point[ind] = 1.0 if full.get(ind, False) else 0.0
                    if state.incumbent_obj is None or _better(state.maximize, obj, state.incumbent_obj):
                        state.incumbent_obj = obj
                        state.incumbent_point = point
                        state.note(node, f"incumbent obj={obj:.9g}", log)
                    else:
                        state.note(node, "pruned-bound", log)
                    state.cv.notify_all()
                    continue
                # branch on the indicator closest to 1 (paper's rule)
                best_ind, best_val = None, -1.0
                for ind in unfixed:
                    val = rel.point[ind]
                    if val > best_val + 1e-12:
                        best_ind, best_val = ind, val
                state.note(node, f"branch {best_ind} (y={best_val:.6g})", log)
                for value in (True, False):
                    attempt = {**node.fixed, best_ind: value}
                    child_fixed = _propagate(attempt, clauses, cards)
                    if child_fixed is None:
                        if log:
                            state.log.append(
                                f"node - depth={node.depth + 1} fixed={_fmt_fixed(attempt)} "
                                f"bound=- action=logic-infeasible"
                            )
                        continue
                    state.push(DbbNode(child_fixed, bound, node.depth + 1, state.next_id))
                state.cv.notify_all()

    if workers <= 1:
        worker()
    else:
        threads = [threading.Thread(target=worker) for _ in range(workers)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    if state.failure is not None:
        raise state.failure
    if state.unbounded:
        return MipSolution(UNBOUNDED, {}, None, None, state.nodes, state.iterations,
                           log_lines=state.log)
    if state.incumbent_obj is None:
        return MipSolution(INFEASIBLE, {}, None, None, state.nodes, state.iterations,
                           log_lines=state.log)
    return MipSolution(
        OPTIMAL,
        state.incumbent_point,
        state.incumbent_obj,
        state.incumbent_obj,
        state.nodes,
        state.iterations,
        log_lines=state.log,
    )


def _better(maximize: bool, a: float, b: float) -> bool:
    return a > b if maximize else a < b


def _fmt_fixed(fixed) -> str:
    if not fixed:
        return "-"
    return ",".join(f"{k}={int(v)}" for k, v in sorted(fixed.items()))


class _DbbState:
    def __init__(self, maximize: bool):
        self.maximize = maximize
        self.heap: list[tuple[float, int, DbbNode]] = []
        self.lock = threading.Lock()
        self.cv = threading.Condition(self.lock)
        self.incumbent_obj: float | None = None
        self.incumbent_point: dict[str, float] | None = None
        self.nodes = 0
        self.iterations = 0
        self.next_id = 1
        self.in_flight = 0
        self.unbounded = False
        self.failure: Exception | None = None
        self.log: list[str] = []

    def push(self, node: DbbNode):
        key = -node.bound if self.maximize else node.bound
        heapq.heappush(self.heap, (key, self.next_id, node))
        self.next_id += 1

    def pop(self) -> DbbNode:
        _key, _nid, node = heapq.heappop(self.heap)
        return node

    def pruned_by_bound(self, bound: float, gap_tol: float) -> bool:
        if self.incumbent_obj is None:
            return False
        slack = gap_tol * (1.0 + abs(self.incumbent_obj))
        if self.maximize:
            return bound <= self.incumbent_obj + slack
        return bound >= self.incumbent_obj - slack

    def note(self, node: DbbNode, action: str, log: bool):
        if log:
            bound = "-" if not math.isfinite(node.bound) else f"{node.bound:.9g}"
            self.log.append(
                f"node {node.id} depth={node.depth} fixed={_fmt_fixed(node.fixed)} "
                f"bound={bound} action={action}"
            )


# -- hull-based cutting planes ----------------------------------------------------


def generate_hull_cut(
    bigm_point: dict[str, float], model: GdpModel, epsilon: float = 1e-4
) -> Cut | None:
    """Separate a big-M relaxation point from the hull relaxation.

    Solves one LP minimizing the L-infinity distance from the point to the
    hull relaxation (over original variables and indicator binaries), then a
    second LP lifting the candidate cut's right-hand side to the hull support
    value so validity is unconditional.  Returns None when the point already
    lies in the projected hull relaxation or no violated cut survives.
    """
    _require_linear(model, "hull cut separation")
    hull = reformulate_hull(model, epsilon)
    target = [v.name for v in model.variables] + model.indicator_order()

    sep = MilpModel(model.name + "__sep")
    for v in hull.variables:
        sep.add_variable(v.name, v.lower, v.upper)
    t = sep.add_variable("__sep_t", 0.0, math.inf)
    for row in hull.rows:
        sep.add_row(row.label, row.expr, row.rel, row.rhs, row.origin)
    for name in target:
        vid = sep.var_id(name)
        p = bigm_point[name]
        sep.add_row(f"__dist_lo_{name}", AffineExpr({vid: 1.0, t: -1.0}), Rel.LE, p,
                    RowOrigin("cut"))
        sep.add_row(f"__dist_hi_{name}", AffineExpr({vid: 1.0, t: 1.0}), Rel.GE, p,
                    RowOrigin("cut"))
    sep.set_objective("min", AffineExpr({t: 1.0}))
    res = solve_lp(sep)
    if res.status != OPTIMAL or res.objective <= _CUT_TOL:
        return None

    xi = {}
    for name in target:
        diff = bigm_point[name] - res.point[name]
        if diff != 0.0:
            xi[name] = diff
    if not xi:
        return None

    # lift the rhs to the support value of the hull relaxation in direction xi
    hull.set_objective("max", AffineExpr({hull.var_id(n): c for n, c in xi.items()}))
    support = solve_lp(hull)
    if support.status != OPTIMAL:
        return None
    rhs = support.objective

    scale = 1.0 / max(abs(c) for c in xi.values())
    terms: dict[str, float] = {}
    dropped = 0.0
    for name, coef in xi.items():
        c = coef * scale
        if abs(c) < 1e-10:
            v = hull.variables[hull.var_id(name)]
            dropped += abs(c) * max(abs(v.lower), abs(v.upper))
        else:
            terms[name] = c
    rhs = rhs * scale + dropped
    violation = sum(c * bigm_point[n] for n, c in terms.items()) - rhs
    if violation <= _CUT_TOL:
        return None

    ids = {name: hull.var_id(name) for name in terms}  # original + indicator ids are
    expr = AffineExpr({ids[n]: c for n, c in terms.items()})  # shared across reformulations
    names = {ids[n]: n for n in terms}
    return Cut(expr, rhs, dict(bigm_point), names)


def solve_hybrid_cuts(
    model: GdpModel,
    max_cuts: int = 10,
    then: str = "mip",
    mspec: MSpec | None = None,
    epsilon: float = 1e-4,
    workers: int = 1,
    log: bool = False,
) -> MipSolution:
    """Tighten the big-M root relaxation with hull cuts, then solve.

    The loop stops when the separation problem reports no violated cut, the
    relaxation optimum is already integral, or `max_cuts` is reached.  The
    cut-augmented model goes to plain MILP branch and bound (`then="mip"`) or
    to disjunctive branch and bound (`then="dbb"`).
    """
    _require_linear(model, "hybrid cutting planes")
    mspec = mspec or MSpec.auto()
    bigm = reformulate_bigm(model, mspec)
    root_bounds: list[float] = []
    cuts: list[Cut] = []
    log_lines: list[str] = []
    for k in range(1, max_cuts + 1):
        rel = solve_lp(bigm)
        if rel.status != OPTIMAL:
            break
        root_bounds.append(rel.objective)
        integral = all(
            min(rel.point[ind], 1.0 - rel.point[ind]) <= _INT_TOL
            for ind in model.indicator_order()
        )
        if integral:
            break
        cut = generate_hull_cut(rel.point, model, epsilon)
        if cut is None:
            break
        bigm.add_row(f"cut_{k}", cut.expr, Rel.LE, cut.rhs, RowOrigin("cut"))
        cuts.append(cut)
        if log:
            viol = sum(c * rel.point[n] for n, c in cut.by_name().items()) - cut.rhs
            log_lines.append(f"cut {k} violation={viol:.6g} rhs={cut.rhs:.9g}")
    if max_cuts > 0 and cuts:
        rel = solve_lp(bigm)
        if rel.status == OPTIMAL:
            root_bounds.append(rel.objective)

    if then == "mip":
        sol = solve_mip(bigm, workers=workers, log=log)
    elif then == "dbb":
        sol = solve_disjunctive_bb(
            model, method="bigm", mspec=mspec, workers=workers, log=log, extra_cuts=cuts
        )
    else:
        raise SolveError(f"unknown follow-up solver '{then}'")
    sol.cuts = len(cuts)
    sol.root_bounds = root_bounds
    sol.log_lines = log_lines + sol.log_lines
    return sol
