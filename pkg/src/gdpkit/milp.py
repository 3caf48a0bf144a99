"""Flat mixed-integer linear models and the embedded solver entry points.

:class:`MilpModel` is the target of the big-M and hull reformulations and the
input to the LP/MIP solvers and the LP writer.  Nonlinear rows (produced by
the epsilon-perspective transform) may be stored but are flagged unsolvable;
the embedded engine handles linear rows only.
"""

from __future__ import annotations

import heapq
import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError, SolveError
from .expr import AffineExpr, NlExpr, Rel
from .simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, simplex_solve

_INT_TOL = 1e-6


@dataclass(frozen=True)
class RowOrigin:
    """Where a row came from: global constraint, a disjunct (with the nesting
    path of (disjunction, indicator) pairs, outermost first), compiled logic,
    structural linkage (aggregation / nested selection), or a cutting plane."""

    kind: str  # global | disjunct | logic | linkage | cut
    path: tuple[tuple[str, str], ...] = ()


@dataclass
class MilpVar:
    id: int
    name: str
    lower: float
    upper: float
    binary: bool = False


@dataclass
class LinRow:
    label: str
    expr: AffineExpr
    rel: Rel
    rhs: float
    origin: RowOrigin


@dataclass
class NlRow:
    label: str
    expr: NlExpr
    rel: Rel
    rhs: float
    origin: RowOrigin
    solvable: bool = False


class MilpModel:
    def __init__(self, name: str = "milp"):
        self.name = name
        self.variables: list[MilpVar] = []
        self.rows: list[LinRow] = []
        self.nl_rows: list[NlRow] = []
        self.objective: tuple[str, AffineExpr] = ("min", AffineExpr())
        self.indicator_to_var: dict[str, int] = {}
        self.hull = None  # HullArtifacts when produced by reformulate_hull
        self._by_name: dict[str, int] = {}

    def add_variable(self, name: str, lower: float, upper: float, binary: bool = False) -> int:
        if name in self._by_name:
            raise ModelError(f"duplicate variable name '{name}' in MILP model")
        vid = len(self.variables)
        self.variables.append(MilpVar(vid, name, float(lower), float(upper), binary))
        self._by_name[name] = vid
        return vid

    def var_id(self, name: str) -> int:
        return self._by_name[name]

    def add_row(self, label: str, expr: AffineExpr, rel: Rel, rhs: float, origin: RowOrigin):
        self.rows.append(LinRow(label, expr, rel, float(rhs), origin))

    def add_nl_row(self, label: str, expr: NlExpr, rel: Rel, rhs: float, origin: RowOrigin):
        self.nl_rows.append(NlRow(label, expr, rel, float(rhs), origin))

    def set_objective(self, sense: str, expr: AffineExpr):
        self.objective = (sense, expr)

    def binaries(self) -> list[int]:
        return [v.id for v in self.variables if v.binary]

    def point_by_id(self, point: dict[str, float]) -> dict[int, float]:
        return {self._by_name[name]: val for name, val in point.items()}

    def row_value(self, row: LinRow, point: dict[str, float]) -> float:
        return row.expr.evaluate(self.point_by_id(point))

    def count_rows_by_kind(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for row in list(self.rows) + list(self.nl_rows):
            out[row.origin.kind] = out.get(row.origin.kind, 0) + 1
        return out

    def signature(self) -> tuple:
        """Canonical structural identity, used by round-trip checks."""
        vs = tuple((v.name, v.lower, v.upper, v.binary) for v in self.variables)
        rows = tuple(
            (r.label, tuple(sorted(r.expr.terms.items())), r.expr.constant, r.rel.value, r.rhs)
            for r in self.rows
        )
        sense, obj = self.objective
        return (vs, rows, (sense, tuple(sorted(obj.terms.items())), obj.constant))

    def _require_linear(self, what: str):
        if self.nl_rows:
            labels = ", ".join(r.label for r in self.nl_rows[:3])
            raise SolveError(
                f"{what}: model '{self.name}' carries {len(self.nl_rows)} nonlinear "
                f"row(s) ({labels}...) that the embedded solver cannot handle"
            )


@dataclass
class LpSolution:
    status: str
    point: dict[str, float]
    objective: float | None
    iterations: int


@dataclass
class MipSolution:
    status: str
    point: dict[str, float]
    objective: float | None
    best_bound: float | None
    nodes: int
    iterations: int
    cuts: int = 0
    log_lines: list[str] = field(default_factory=list)
    history: list[tuple[float | None, float | None]] = field(default_factory=list)
    root_bounds: list[float] = field(default_factory=list)


def _to_arrays(m: MilpModel, bound_overrides=None):
    n = len(m.variables)
    lo = np.array([v.lower for v in m.variables])
    hi = np.array([v.upper for v in m.variables])
    if bound_overrides:
        for vid, (l, h) in bound_overrides.items():
            lo[vid], hi[vid] = l, h
    A = np.zeros((len(m.rows), n))
    rhs = np.zeros(len(m.rows))
    rels = []
    for i, row in enumerate(m.rows):
        for vid, coef in row.expr.terms.items():
            A[i, vid] = coef
        rhs[i] = row.rhs - row.expr.constant
        rels.append(row.rel)
    sense, obj = m.objective
    c = np.zeros(n)
    for vid, coef in obj.terms.items():
        c[vid] = coef
    return c, obj.constant, A, rels, rhs, lo, hi, sense == "max"


def solve_lp(m: MilpModel, bound_overrides: dict[int, tuple[float, float]] | None = None) -> LpSolution:
    """Solve the continuous relaxation (binary bounds become [0, 1])."""
    m._require_linear("solve_lp")
    c, c0, A, rels, rhs, lo, hi, maximize = _to_arrays(m, bound_overrides)
    res = simplex_solve(c, c0, A, rels, rhs, lo, hi, maximize=maximize)
    if res.status != OPTIMAL:
        return LpSolution(res.status, {}, None, res.iterations)
    point = {v.name: float(res.x[v.id]) for v in m.variables}
    _check_feasible(m, res.x, lo, hi)
    return LpSolution(OPTIMAL, point, res.objective, res.iterations)


def _check_feasible(m: MilpModel, x, lo, hi, tol=1e-7):
    if np.any(x < lo - tol) or np.any(x > hi + tol):
        raise SolveError("simplex returned a point violating variable bounds")
    for row in m.rows:
        val = sum(coef * x[vid] for vid, coef in row.expr.terms.items()) + row.expr.constant
        if row.rel is Rel.LE and val > row.rhs + tol:
            raise SolveError(f"simplex returned a point violating row '{row.label}'")
        if row.rel is Rel.GE and val < row.rhs - tol:
            raise SolveError(f"simplex returned a point violating row '{row.label}'")
        if row.rel is Rel.EQ and abs(val - row.rhs) > tol:
            raise SolveError(f"simplex returned a point violating row '{row.label}'")


class _BbState:
    """Shared branch-and-bound state; all mutation happens under the lock so
    multiple workers can process open nodes concurrently."""

    def __init__(self, maximize: bool):
        self.maximize = maximize
        self.heap: list[tuple[float, int, dict]] = []
        self.lock = threading.Lock()
        self.cv = threading.Condition(self.lock)
        self.incumbent_obj: float | None = None
        self.incumbent_point: dict[str, float] | None = None
        self.nodes = 0
        self.iterations = 0
        self.next_id = 1
        self.in_flight = 0
        self.history: list[tuple[float | None, float | None]] = []
        self.log: list[str] = []
        self.failure: Exception | None = None

    def key(self, bound: float) -> float:
        return -bound if self.maximize else bound


def _better(maximize: bool, a: float, b: float) -> bool:
    return a > b if maximize else a < b


def solve_mip(
    m: MilpModel,
    gap_tol: float = 1e-9,
    int_tol: float = _INT_TOL,
    workers: int = 1,
    log: bool = False,
) -> MipSolution:
    """Branch and bound over the binary variables.

    Node selection is best-bound; branching picks the most fractional binary
    with ties broken by lowest variable index.  Deterministic results are
    guaranteed in single-worker mode only.
    """
    m._require_linear("solve_mip")
    sense = m.objective[0]
    maximize = sense == "max"
    binaries = m.binaries()

    state = _BbState(maximize)
    root_sol = solve_lp(m)
    state.iterations += root_sol.iterations
    state.nodes += 1
    if root_sol.status == INFEASIBLE:
        return MipSolution(INFEASIBLE, {}, None, None, 1, state.iterations)
    if root_sol.status == UNBOUNDED:
        return MipSolution(UNBOUNDED, {}, None, None, 1, state.iterations)

    def frac_binary(point):
        worst, worst_frac = None, int_tol
        for vid in binaries:
            val = point[m.variables[vid].name]
            frac = min(val, 1.0 - val)
            if frac > worst_frac + 1e-15:
                worst, worst_frac = vid, frac
        return worst

    def note(node_id, fixed, bound, action):
        if log:
            fixed_s = ",".join(f"{m.variables[k].name}={v}" for k, v in sorted(fixed.items())) or "-"
            state.log.append(f"node {node_id} fixed={fixed_s} bound={bound:.9g} action={action}")

    def register(sol, fixed, node_id):
        """Handle a solved node; returns child fixings to enqueue."""
        bound = sol.objective
        inc = state.incumbent_obj
        slack = gap_tol * (1.0 + abs(inc)) if inc is not None else 0.0
        if inc is not None and not _better(maximize, bound, inc + (slack if maximize else -slack)):
            note(node_id, fixed, bound, "pruned-bound")
            return []
        branch_var = frac_binary(sol.point)
        if branch_var is None:
            point = dict(sol.point)
            for vid in binaries:
                name = m.variables[vid].name
                point[name] = float(round(point[name]))
            if inc is None or _better(maximize, bound, inc):
                state.incumbent_obj = bound
                state.incumbent_point = point
                note(node_id, fixed, bound, "incumbent")
            else:
                note(node_id, fixed, bound, "pruned-bound")
            return []
        note(node_id, fixed, bound, f"branch {m.variables[branch_var].name}")
        lo_child = dict(fixed)
        lo_child[branch_var] = 0
        hi_child = dict(fixed)
        hi_child[branch_var] = 1
        return [(bound, hi_child), (bound, lo_child)]

    # seed
    children = register(root_sol, {}, 0)
    state.history.append((root_sol.objective, state.incumbent_obj))
    for bound, fixed in children:
        heapq.heappush(state.heap, (state.key(bound), state.next_id, fixed))
        state.next_id += 1

    def open_bound_locked():
        best = state.heap[0][0] if state.heap else None
        return (-best if maximize else best) if best is not None else None

    def worker():
        while True:
            with state.cv:
                while not state.heap and state.in_flight > 0 and state.failure is None:
                    state.cv.wait()
                if state.failure is not None or not state.heap:
                    return
                key, node_id, fixed = heapq.heappop(state.heap)
                bound_est = -key if maximize else key
                inc = state.incumbent_obj
                slack = gap_tol * (1.0 + abs(inc)) if inc is not None else 0.0
                if inc is not None and not _better(
                    maximize, bound_est, inc + (slack if maximize else -slack)
                ):
                    note(node_id, fixed, bound_est, "pruned-bound")
                    continue
                state.in_flight += 1
            try:
                overrides = {vid: (float(v), float(v)) for vid, v in fixed.items()}
                sol = solve_lp(m, bound_overrides=overrides)
            except Exception as exc:  # propagate solver failures out of the pool
                with state.cv:
                    state.failure = exc
                    state.in_flight -= 1
                    state.cv.notify_all()
                return
            with state.cv:
                state.in_flight -= 1
                state.nodes += 1
                state.iterations += sol.iterations
                if sol.status == INFEASIBLE:
                    if log:
                        note(node_id, fixed, math.nan, "pruned-infeasible")
                elif sol.status == UNBOUNDED:
                    state.failure = SolveError("node relaxation unbounded below a bounded root")
                else:
                    for bound, child in register(sol, fixed, node_id):
                        heapq.heappush(state.heap, (state.key(bound), state.next_id, child))
                        state.next_id += 1
                    state.history.append((open_bound_locked(), state.incumbent_obj))
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

    if state.incumbent_obj is None:
        return MipSolution(INFEASIBLE, {}, None, None, state.nodes, state.iterations,
                           log_lines=state.log, history=state.history)
    return MipSolution(
        OPTIMAL,
        state.incumbent_point,
        state.incumbent_obj,
        state.incumbent_obj,
        state.nodes,
        state.iterations,
        log_lines=state.log,
        history=state.history,
    )
