"""Bounded-variable primal simplex with dense numpy algebra.

The solver works on the computational form

    min c.x   s.t.  A x (<=,>=,=) rhs,   lo <= x <= hi

adding one slack column per row so the slacks form the starting basis.  Rows
whose initial residual falls outside the slack bounds receive an artificial
column, and feasibility is restored by minimizing the artificial sum
(phase 1) before optimizing the true objective (phase 2).

Pivot rule: largest reduced-cost violation (Dantzig), switching to Bland's
rule after a run of 50 degenerate steps to rule out cycling.  Basic values
are recomputed from the factored basis every iteration, which keeps drift out
at the dense desk scale this engine targets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SimplexNumericalError
from .expr import Rel

_TOL = 1e-9  # reduced-cost and ratio-test tolerance
_FEAS_TOL = 1e-7

_BASIC, _AT_LO, _AT_UP, _FREE = 0, 1, 2, 3

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class SimplexResult:
    status: str
    x: np.ndarray | None  # structural variable values
    objective: float | None
    iterations: int


def simplex_solve(
    c: np.ndarray,
    c0: float,
    A: np.ndarray,
    rels: list[Rel],
    rhs: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    maximize: bool = False,
    max_iter: int | None = None,
) -> SimplexResult:
    """Solve a bounded LP given row-wise constraint data over structural
    variables; returns structural values only."""
    m, n = A.shape
    cmin = (-c if maximize else c).astype(float)

    if m == 0:
        return _solve_unconstrained(cmin, c0, lo, hi, maximize)

    state = _State(cmin, A, rels, rhs, lo, hi, max_iter)
    state.initialize()

    if state.n_art:
        phase1_cost = np.zeros(state.ncols)
        phase1_cost[state.art_slice] = 1.0
        status, obj = state.optimize(phase1_cost, phase=1)
        if status != OPTIMAL:  # phase 1 is bounded below by zero
            raise SimplexNumericalError("phase-1 subproblem did not terminate optimal")
        if obj > _FEAS_TOL:
            return SimplexResult(INFEASIBLE, None, None, state.iterations)
        state.pin_artificials()

    status, obj = state.optimize(state.cfull, phase=2)
    if status == UNBOUNDED:
        return SimplexResult(UNBOUNDED, None, None, state.iterations)
    xs = state.x[:n].copy()
    value = float(obj + c0)
    if maximize:
        value = -value
    return SimplexResult(OPTIMAL, xs, value, state.iterations)


def _solve_unconstrained(cmin, c0, lo, hi, maximize):
    x = np.zeros(len(cmin))
    for j, cj in enumerate(cmin):
        if cj > 0:
            if not np.isfinite(lo[j]):
                return SimplexResult(UNBOUNDED, None, None, 0)
            x[j] = lo[j]
        elif cj < 0:
            if not np.isfinite(hi[j]):
                return SimplexResult(UNBOUNDED, None, None, 0)
            x[j] = hi[j]
        else:
            x[j] = lo[j] if np.isfinite(lo[j]) else (hi[j] if np.isfinite(hi[j]) else 0.0)
    value = float(cmin @ x + c0)
    return SimplexResult(OPTIMAL, x, -value if maximize else value, 0)


class _State:
    def __init__(self, cmin, A, rels, rhs, lo, hi, max_iter):
        self.m, self.n = A.shape
        m, n = self.m, self.n
        slack_lo = np.empty(m)
        slack_hi = np.empty(m)
        for i, rel in enumerate(rels):
            if rel is Rel.LE:
                slack_lo[i], slack_hi[i] = 0.0, np.inf
            elif rel is Rel.GE:
                slack_lo[i], slack_hi[i] = -np.inf, 0.0
            else:
                slack_lo[i], slack_hi[i] = 0.0, 0.0
        self.A = np.hstack([A.astype(float), np.eye(m)])
        self.b = rhs.astype(float)
        self.lo = np.concatenate([lo.astype(float), slack_lo])
        self.hi = np.concatenate([hi.astype(float), slack_hi])
        self.cfull = np.concatenate([cmin, np.zeros(m)])
        self.ncols = n + m
        self.n_art = 0
        self.art_slice = slice(0, 0)
        self.iterations = 0
        self.max_iter = max_iter
        self.x = np.zeros(self.ncols)
        self.stat = np.full(self.ncols, _AT_LO, dtype=int)
        self.basis = np.arange(n, n + m)

    def initialize(self):
        for j in range(self.n):
            lo, hi = self.lo[j], self.hi[j]
            if np.isfinite(lo) and np.isfinite(hi):
                if abs(lo) <= abs(hi):
                    self.x[j], self.stat[j] = lo, _AT_LO
                else:
                    self.x[j], self.stat[j] = hi, _AT_UP
            elif np.isfinite(lo):
                self.x[j], self.stat[j] = lo, _AT_LO
            elif np.isfinite(hi):
                self.x[j], self.stat[j] = hi, _AT_UP
            else:
                self.x[j], self.stat[j] = 0.0, _FREE

        resid = self.b - self.A[:, : self.n] @ self.x[: self.n]
        art_cols = []
        art_rows = []
        for i in range(self.m):
            s = self.n + i
            v = resid[i]
            if self.lo[s] - 1e-11 <= v <= self.hi[s] + 1e-11:
                self.x[s] = v
                self.stat[s] = _BASIC
            else:
                bound = self.lo[s] if v < self.lo[s] else self.hi[s]
                self.x[s] = bound
                self.stat[s] = _AT_LO if bound == self.lo[s] else _AT_UP
                deficit = v - bound
                col = np.zeros(self.m)
                col[i] = 1.0 if deficit > 0 else -1.0
                art_cols.append(col)
                art_rows.append((i, abs(deficit)))

        if art_cols:
            k = len(art_cols)
            self.A = np.hstack([self.A, np.column_stack(art_cols)])
            self.lo = np.concatenate([self.lo, np.zeros(k)])
            self.hi = np.concatenate([self.hi, np.full(k, np.inf)])
            self.cfull = np.concatenate([self.cfull, np.zeros(k)])
            self.x = np.concatenate([self.x, np.zeros(k)])
            self.stat = np.concatenate([self.stat, np.full(k, _BASIC, dtype=int)])
            self.art_slice = slice(self.ncols, self.ncols + k)
            for j, (row, value) in enumerate(art_rows):
                self.basis[row] = self.ncols + j
                self.x[self.ncols + j] = value
            self.ncols += k
            self.n_art = k

    def pin_artificials(self):
        # artificials can never re-enter once fixed at zero width
        self.lo[self.art_slice] = 0.0
        self.hi[self.art_slice] = 0.0

    # -- core iteration -------------------------------------------------------

    def _refresh_basics(self, B):
        xs = self.x.copy()
        xs[self.basis] = 0.0
        resid = self.b - self.A @ xs
        try:
            self.x[self.basis] = np.linalg.solve(B, resid)
        except np.linalg.LinAlgError as exc:
            raise SimplexNumericalError("singular basis matrix") from exc

    def _pick_entering(self, d, bland):
        best_j, best_dir, best_score = -1, 0, _TOL
        for j in range(self.ncols):
            if self.stat[j] == _BASIC or self.lo[j] == self.hi[j]:
                continue
            dj = d[j]
            if self.stat[j] == _AT_LO:
                if dj >= -_TOL:
                    continue
                score, direction = -dj, 1
            elif self.stat[j] == _AT_UP:
                if dj <= _TOL:
                    continue
                score, direction = dj, -1
            else:  # free at zero
                if abs(dj) <= _TOL:
                    continue
                score, direction = abs(dj), 1 if dj < 0 else -1
            if bland:
                return j, direction
            if score > best_score:
                best_j, best_dir, best_score = j, direction, score
        return (best_j, best_dir) if best_j >= 0 else (None, 0)

    def _ratio_test(self, e, direction, w, bland):
        if np.isfinite(self.lo[e]) and np.isfinite(self.hi[e]):
            t_best = self.hi[e] - self.lo[e]
        else:
            t_best = np.inf
        leave_pos, leave_to, leave_piv = -1, 0, 0.0
        for i in range(self.m):
            k = self.basis[i]
            wi = direction * w[i]
            if wi > _TOL:
                if not np.isfinite(self.lo[k]):
                    continue
                ti = (self.x[k] - self.lo[k]) / wi
                hit = _AT_LO
            elif wi < -_TOL:
                if not np.isfinite(self.hi[k]):
                    continue
                ti = (self.hi[k] - self.x[k]) / (-wi)
                hit = _AT_UP
            else:
                continue
            if ti < 0.0:
                ti = 0.0  # roundoff on a degenerate basic value
            if ti < t_best - 1e-12:
                t_best, leave_pos, leave_to, leave_piv = ti, i, hit, abs(wi)
            elif leave_pos >= 0 and abs(ti - t_best) <= 1e-12:
                if bland:
                    if k < self.basis[leave_pos]:
                        leave_pos, leave_to, leave_piv = i, hit, abs(wi)
                elif abs(wi) > leave_piv:
                    leave_pos, leave_to, leave_piv = i, hit, abs(wi)
        return t_best, leave_pos, leave_to

    def optimize(self, c, phase):
        cap = self.max_iter or max(500, 50 * (self.m + self.ncols))
        bland = False
        degen_run = 0
        while True:
            self.iterations += 1
            if self.iterations > cap * 2 + 1000:
                raise SimplexNumericalError(
                    f"simplex exceeded {cap * 2 + 1000} iterations (phase {phase})"
                )
            B = self.A[:, self.basis]
            self._refresh_basics(B)
            try:
                y = np.linalg.solve(B.T, c[self.basis])
            except np.linalg.LinAlgError as exc:
                raise SimplexNumericalError("singular basis matrix") from exc
            d = c - self.A.T @ y

            e, direction = self._pick_entering(d, bland)
            if e is None:
                return OPTIMAL, float(c @ self.x)

            try:
                w = np.linalg.solve(B, self.A[:, e])
            except np.linalg.LinAlgError as exc:
                raise SimplexNumericalError("singular basis matrix") from exc

            t, leave_pos, leave_to = self._ratio_test(e, direction, w, bland)
            if not np.isfinite(t):
                return UNBOUNDED, None

            if t > _TOL:
                degen_run = 0
                bland = False
            else:
                degen_run += 1
                if degen_run >= 50:
                    bland = True

            self.x[self.basis] -= direction * t * w
            self.x[e] += direction * t
            if leave_pos < 0:
                # bound flip: the entering variable crosses to its other bound
                self.stat[e] = _AT_UP if self.stat[e] == _AT_LO else _AT_LO
                self.x[e] = self.hi[e] if self.stat[e] == _AT_UP else self.lo[e]
            else:
                k = self.basis[leave_pos]
                self.stat[k] = leave_to
                self.x[k] = self.lo[k] if leave_to == _AT_LO else self.hi[k]
                self.basis[leave_pos] = e
                self.stat[e] = _BASIC
