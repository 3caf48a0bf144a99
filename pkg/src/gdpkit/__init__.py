"""gdpkit: generalized disjunctive programming toolkit.

Build models with disjunctions and logic propositions, reformulate them into
mixed-integer linear programs via big-M or hull methods, and solve with an
embedded bounded-variable simplex / branch-and-bound engine, including
disjunctive branch and bound and hull-derived cutting planes.
"""

from .errors import (
    EvaluationError,
    GdpError,
    MissingMError,
    MissingVariableError,
    ModelError,
    NonfiniteResultError,
    NonlinearConstraintError,
    ParseError,
    ReformulationError,
    SimplexNumericalError,
    SolveError,
    UnmappedIndicatorError,
    ValidationError,
)
from .expr import (
    AffineExpr,
    Constraint,
    NlConst,
    NlExpr,
    NlPow,
    NlProd,
    NlScaled,
    NlSum,
    NlVar,
    Rel,
    VariableRef,
    VarKind,
    evaluate,
    linearity_of,
    rename_variables,
    substitute_scaled,
)
from .gdp_solve import Cut, DbbNode, generate_hull_cut, solve_disjunctive_bb, solve_hybrid_cuts
from .interval import Interval, range_of, tight_m
from .logic import (
    And,
    Cardinality,
    CnfFormula,
    Iff,
    Implies,
    Lit,
    Not,
    Or,
    Proposition,
    cardinality_to_linear,
    clause_to_linear,
    to_cnf,
)
from .lp_io import lp_format, parse_lp, parse_lp_file, write_lp_file
from .milp import (
    LinRow,
    LpSolution,
    MilpModel,
    MilpVar,
    MipSolution,
    NlRow,
    RowOrigin,
    solve_lp,
    solve_mip,
)
from .model import Disjunct, Disjunction, GdpModel, IndicatorDecl
from .modelfile import emit_model, parse_model, parse_proposition
from .reformulate import (
    HullArtifacts,
    MSpec,
    perspective_epsilon,
    reformulate_bigm,
    reformulate_hull,
)

__version__ = "0.1.0"

__all__ = [
    "AffineExpr",
    "And",
    "Cardinality",
    "CnfFormula",
    "Constraint",
    "Cut",
    "DbbNode",
    "Disjunct",
    "Disjunction",
    "EvaluationError",
    "GdpError",
    "GdpModel",
    "HullArtifacts",
    "Iff",
    "Implies",
    "IndicatorDecl",
    "Interval",
    "LinRow",
    "Lit",
    "LpSolution",
    "MSpec",
    "MilpModel",
    "MilpVar",
    "MipSolution",
    "MissingMError",
    "MissingVariableError",
    "ModelError",
    "NlConst",
    "NlExpr",
    "NlPow",
    "NlProd",
    "NlRow",
    "NlScaled",
    "NlSum",
    "NlVar",
    "NonfiniteResultError",
    "NonlinearConstraintError",
    "Not",
    "Or",
    "ParseError",
    "Proposition",
    "ReformulationError",
    "Rel",
    "RowOrigin",
    "SimplexNumericalError",
    "SolveError",
    "UnmappedIndicatorError",
    "ValidationError",
    "VarKind",
    "VariableRef",
    "cardinality_to_linear",
    "clause_to_linear",
    "emit_model",
    "evaluate",
    "generate_hull_cut",
    "linearity_of",
    "lp_format",
    "parse_lp",
    "parse_lp_file",
    "parse_model",
    "parse_proposition",
    "perspective_epsilon",
    "range_of",
    "reformulate_bigm",
    "reformulate_hull",
    "rename_variables",
    "solve_disjunctive_bb",
    "solve_hybrid_cuts",
    "solve_lp",
    "solve_mip",
    "substitute_scaled",
    "tight_m",
    "to_cnf",
    "write_lp_file",
]
