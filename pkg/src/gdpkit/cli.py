"""Command-line front end: check, reformulate, solve, and compare.

Exit codes: 0 success/optimal, 2 usage/parse/validation errors, 3 infeasible,
4 unbounded.  Reports are deterministic for identical inputs and flags in
single-worker mode; timing is logged to stderr (set GDPKIT_LOG=INFO) instead
of being printed in the report.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import dataclass, field

from .errors import GdpError, ParseError
from .gdp_solve import solve_disjunctive_bb, solve_hybrid_cuts
from .lp_io import lp_format, write_lp_file
from .milp import INFEASIBLE, OPTIMAL, UNBOUNDED, solve_lp, solve_mip
from .model import GdpModel
from .modelfile import parse_model
from .reformulate import MSpec, reformulate_bigm, reformulate_hull

log = logging.getLogger("gdpkit")

_EXIT_OK = 0
_EXIT_USAGE = 2
_EXIT_INFEASIBLE = 3
_EXIT_UNBOUNDED = 4


@dataclass
class SolutionReport:
    status: str
    objective: float | None
    variable_values: dict[str, float]
    selected_indicators: list[str]
    statistics: dict[str, int]
    wall_time: float = 0.0
    log_lines: list[str] = field(default_factory=list)

    def render(self) -> str:
        lines = [f"status: {self.status}"]
        if self.objective is not None:
            lines.append(f"objective: {_num(self.objective)}")
        if self.variable_values:
            lines.append("variables:")
            for name, value in self.variable_values.items():
                lines.append(f"  {name} = {_num(value)}")
        if self.selected_indicators:
            lines.append("indicators:")
            for name in self.selected_indicators:
                lines.append(f"  {name}")
        lines.append("statistics:")
        for key, value in self.statistics.items():
            lines.append(f"  {key}: {value}")
        return "\n".join(lines) + "\n"


def _num(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return f"{value:.9g}"


def _load(path: str) -> GdpModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read '{path}': {exc}") from None
    return parse_model(text)


def _parse_mspec(text: str) -> MSpec:
    if text == "auto":
        return MSpec.auto()
    if text.startswith("disjunct:") or text.startswith("constraint:"):
        kind, _, body = text.partition(":")
        table = {}
        for item in body.split(","):
            name, _, value = item.partition("=")
            if not name or not value:
                raise ParseError(f"bad --m entry '{item}' (expected NAME=VALUE)")
            try:
                table[name.strip()] = float(value)
            except ValueError:
                raise ParseError(f"bad --m value '{value}'") from None
        return MSpec.per_disjunct(table) if kind == "disjunct" else MSpec.per_constraint(table)
    try:
        return MSpec.uniform(float(text))
    except ValueError:
        raise ParseError(
            f"bad --m spec '{text}' (use auto, a number, disjunct:..., or constraint:...)"
        ) from None


def _check_epsilon(value: float) -> float:
    if not (0.0 < value < 1.0):
        raise ParseError(f"--epsilon must lie in (0, 1), got {value}")
    return value


def cmd_check(args) -> int:
    model = _load(args.file)
    diags = model.validate()
    if diags:
        for d in diags:
            print(f"error: {d}")
        return _EXIT_USAGE
    n_disj = len(model.all_disjunctions())
    print(
        f"ok: {len(model.variables)} variables, {len(model.global_constraints)} global "
        f"constraints, {n_disj} disjunctions, {len(model.indicators)} indicators"
    )
    return _EXIT_OK


def _reformulated(model, args):
    if args.method == "bigm":
        return reformulate_bigm(model, _parse_mspec(args.m))
    return reformulate_hull(model, _check_epsilon(args.epsilon))


def cmd_reformulate(args) -> int:
    model = _load(args.file)
    diags = model.validate()
    if diags:
        for d in diags:
            print(f"error: {d}")
        return _EXIT_USAGE
    milp = _reformulated(model, args)
    if args.out:
        write_lp_file(milp, args.out)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(lp_format(milp))
    n_bin = len(milp.binaries())
    print(f"variables: {len(milp.variables)} ({n_bin} binary)")
    counts = milp.count_rows_by_kind()
    for kind in ("global", "disjunct", "logic", "linkage", "cut"):
        if kind in counts:
            print(f"rows[{kind}]: {counts[kind]}")
    if milp.nl_rows:
        print(f"rows[nonlinear]: {len(milp.nl_rows)} (not natively solvable)")
    return _EXIT_OK


def _solve_dispatch(model, args):
    if args.algo == "mip":
        milp = _reformulated(model, args)
        return solve_mip(milp, workers=args.workers, log=bool(args.log))
    if args.algo == "dbb":
        return solve_disjunctive_bb(
            model,
            method=args.method,
            mspec=_parse_mspec(args.m),
            epsilon=_check_epsilon(args.epsilon),
            workers=args.workers,
            log=bool(args.log),
        )
    # hybrid cuts operate on the big-M reformulation by definition
    return solve_hybrid_cuts(
        model,
        max_cuts=args.max_cuts,
        then="mip",
        mspec=_parse_mspec(args.m),
        epsilon=_check_epsilon(args.epsilon),
        workers=args.workers,
        log=bool(args.log),
    )


def cmd_solve(args) -> int:
    model = _load(args.file)
    diags = model.validate()
    if diags:
        for d in diags:
            print(f"error: {d}")
        return _EXIT_USAGE
    start = time.perf_counter()
    sol = _solve_dispatch(model, args)
    elapsed = time.perf_counter() - start
    log.info("solve finished in %.3fs", elapsed)

    var_names = [v.name for v in model.variables]
    values = {name: sol.point[name] for name in var_names if name in sol.point}
    selected = [
        ind for ind in model.indicator_order() if sol.point.get(ind, 0.0) > 0.5
    ]
    report = SolutionReport(
        status=sol.status,
        objective=sol.objective,
        variable_values=values,
        selected_indicators=selected,
        statistics={
            "nodes": sol.nodes,
            "cuts": sol.cuts,
            "simplex_iterations": sol.iterations,
        },
        wall_time=elapsed,
        log_lines=sol.log_lines,
    )
    sys.stdout.write(report.render())
    if args.log:
        with open(args.log, "w", encoding="utf-8") as fh:
            fh.write("\n".join(sol.log_lines) + ("\n" if sol.log_lines else ""))
    if sol.status == INFEASIBLE:
        return _EXIT_INFEASIBLE
    if sol.status == UNBOUNDED:
        return _EXIT_UNBOUNDED
    return _EXIT_OK


def cmd_compare(args) -> int:
    model = _load(args.file)
    diags = model.validate()
    if diags:
        for d in diags:
            print(f"error: {d}")
        return _EXIT_USAGE
    sense = model.objective[0]
    bigm = reformulate_bigm(model, MSpec.auto())
    hull = reformulate_hull(model, _check_epsilon(args.epsilon))
    rows = []
    relaxations = {}
    for label, milp in (("bigm", bigm), ("hull", hull)):
        rel = solve_lp(milp)
        relaxations[label] = rel
        value = _num(rel.objective) if rel.status == OPTIMAL else rel.status
        rows.append(
            (label, len(milp.rows), len(milp.variables), len(milp.binaries()), value)
        )
    print(f"{'method':<8}{'rows':>6}{'cols':>6}{'binaries':>10}  lp_relaxation")
    for label, nrows, ncols, nbin, value in rows:
        print(f"{label:<8}{nrows:>6}{ncols:>6}{nbin:>10}  {value}")
    rb, rh = relaxations["bigm"], relaxations["hull"]
    if rb.status == OPTIMAL and rh.status == OPTIMAL:
        gap = rb.objective - rh.objective
        if sense == "max" and rh.objective > rb.objective + 1e-9:
            raise GdpError("hull relaxation bound exceeds big-M bound on a maximization")
        if sense == "min" and rh.objective < rb.objective - 1e-9:
            raise GdpError("hull relaxation bound undercuts big-M bound on a minimization")
        print(f"relaxation gap (bigm - hull): {_num(gap)}")
        return _EXIT_OK
    print("relaxation gap (bigm - hull): n/a")
    return _EXIT_INFEASIBLE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gdpkit",
        description="Model, reformulate (big-M / hull), and solve generalized "
        "disjunctive programs with an embedded simplex/branch-and-bound engine.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="parse and validate a model file")
    p_check.add_argument("file")
    p_check.set_defaults(func=cmd_check)

    p_ref = sub.add_parser("reformulate", help="emit the MILP reformulation as an LP file")
    p_ref.add_argument("file")
    p_ref.add_argument("--method", choices=("bigm", "hull"), default="bigm")
    p_ref.add_argument("--m", default="auto",
                       help="big-M spec: auto | NUMBER | disjunct:Y=V,... | constraint:LBL=V,...")
    p_ref.add_argument("--epsilon", type=float, default=1e-4,
                       help="perspective epsilon for --method hull")
    p_ref.add_argument("--out", help="output LP path (default: stdout)")
    p_ref.set_defaults(func=cmd_reformulate)

    p_solve = sub.add_parser("solve", help="solve a linear GDP model")
    p_solve.add_argument("file")
    p_solve.add_argument("--method", choices=("bigm", "hull"), default="bigm")
    p_solve.add_argument("--algo", choices=("mip", "dbb", "cuts"), default="mip")
    p_solve.add_argument("--m", default="auto")
    p_solve.add_argument("--epsilon", type=float, default=1e-4)
    p_solve.add_argument("--max-cuts", type=int, default=10, dest="max_cuts")
    p_solve.add_argument("--workers", type=int, default=1)
    p_solve.add_argument("--log", help="write the node/cut log to this file")
    p_solve.set_defaults(func=cmd_solve)

    p_cmp = sub.add_parser("compare", help="compare big-M and hull relaxation tightness")
    p_cmp.add_argument("file")
    p_cmp.add_argument("--epsilon", type=float, default=1e-4)
    p_cmp.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("GDPKIT_LOG", "WARNING").upper()
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    except GdpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_USAGE


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
