"""Exception types shared across the toolkit."""


class GdpError(Exception):
    """Base class for all gdpkit errors."""


class ModelError(GdpError):
    """Invalid model construction (bad bounds, duplicate names, unknown refs)."""


class ValidationError(ModelError):
    """A model failed validation; carries the diagnostic list."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("model validation failed:\n  " + "\n  ".join(self.diagnostics))


class EvaluationError(GdpError):
    """Expression evaluation failed."""


class MissingVariableError(EvaluationError):
    """A point did not assign a variable required by the expression."""

    def __init__(self, var_id):
        self.var_id = var_id
        super().__init__(f"no value assigned for variable id {var_id}")


class NonfiniteResultError(EvaluationError):
    """Evaluation hit a zero divisor in a scale-substituted node."""


class UnmappedIndicatorError(GdpError):
    """A logic constraint references an indicator with no binary variable."""

    def __init__(self, indicator):
        self.indicator = indicator
        super().__init__(f"indicator '{indicator}' is not mapped to a binary variable")


class ReformulationError(GdpError):
    """A model cannot be reformulated as requested."""


class MissingMError(ReformulationError):
    """A nonlinear disjunct constraint has no explicit big-M value."""


class NonlinearConstraintError(GdpError):
    """A nonlinear expression reached a component that requires affine input."""


class SolveError(GdpError):
    """The embedded solver failed."""


class SimplexNumericalError(SolveError):
    """Simplex exceeded its iteration cap or lost feasibility."""


class ParseError(GdpError):
    """A model or LP file failed to parse; carries position info."""

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", col {col})" if col is not None else ")")
        super().__init__(message + where)
