"""LP-format text files: deterministic writer plus a round-trip parser.

Layout: `Maximize|Minimize`, `Subject To`, `Bounds`, `Binary`, `End`, one row
per line as `name: expr relop rhs`.  Coefficients are printed with 17
significant digits so every float64 survives a round trip.  Variable and row
names are sanitized to LP-safe identifiers; any renames are recorded in
comment lines at the top of the file.
"""

from __future__ import annotations

import math
import re

from .errors import ParseError
from .expr import AffineExpr, Rel
from .milp import MilpModel, RowOrigin

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*$")
_TOKEN_RE = re.compile(
    r"\s*(<=|>=|=|\+|-|[A-Za-z_][A-Za-z0-9_.]*|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
)


def _fmt(value: float) -> str:
    if value == math.inf:
        return "inf"
    if value == -math.inf:
        return "-inf"
    return f"{value:.17g}"


def _sanitize(name: str, used: set[str]) -> str:
    clean = re.sub(r"[^A-Za-z0-9_.]", "_", name)
    if not clean or not _NAME_RE.match(clean):
        clean = "v_" + clean
    base = clean
    k = 2
    while clean in used:
        clean = f"{base}_{k}"
        k += 1
    used.add(clean)
    return clean


def _expr_text(expr: AffineExpr, names: dict[int, str]) -> str:
    parts: list[str] = []
    for vid, coef in expr.terms.items():
        mag = abs(coef)
        term = names[vid] if mag == 1.0 else f"{_fmt(mag)} {names[vid]}"
        if not parts:
            parts.append(term if coef > 0 else f"- {term}")
        else:
            parts.append(("+ " if coef > 0 else "- ") + term)
    if expr.constant != 0.0 or not parts:
        c = expr.constant
        if not parts:
            parts.append(_fmt(c))
        else:
            parts.append(("+ " if c > 0 else "- ") + _fmt(abs(c)))
    return " ".join(parts)


def lp_format(m: MilpModel) -> str:
    """Render a linear model as LP text."""
    m._require_linear("write_lp_file")
    used: set[str] = set()
    var_names: dict[int, str] = {}
    renames: list[tuple[str, str]] = []
    for v in m.variables:
        clean = _sanitize(v.name, used)
        var_names[v.id] = clean
        if clean != v.name:
            renames.append((v.name, clean))
    row_used: set[str] = set()
    row_names = []
    for row in m.rows:
        clean = _sanitize(row.label, row_used)
        row_names.append(clean)
        if clean != row.label:
            renames.append((row.label, clean))

    lines = [f"\\ gdpkit model '{m.name}'"]
    for orig, clean in renames:
        lines.append(f"\\ renamed: '{orig}' -> {clean}")
    sense, obj = m.objective
    lines.append("Maximize" if sense == "max" else "Minimize")
    lines.append(f" obj: {_expr_text(obj, var_names)}")
    lines.append("Subject To")
    for row, label in zip(m.rows, row_names):
        lines.append(f" {label}: {_expr_text(row.expr, var_names)} {row.rel.value} {_fmt(row.rhs)}")
    lines.append("Bounds")
    for v in m.variables:
        lines.append(f" {_fmt(v.lower)} <= {var_names[v.id]} <= {_fmt(v.upper)}")
    binaries = [v for v in m.variables if v.binary]
    if binaries:
        lines.append("Binary")
        for v in binaries:
            lines.append(f" {var_names[v.id]}")
    lines.append("End")
    return "\n".join(lines) + "\n"


def write_lp_file(m: MilpModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(lp_format(m))


# -- parser -------------------------------------------------------------------


def _tokenize(text: str, lineno: int) -> list[str]:
    out = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        match = _TOKEN_RE.match(text, pos)
        if not match:
            raise ParseError(f"unexpected character {text[pos:].strip()[0]!r}", line=lineno)
        out.append(match.group(1))
        pos = match.end()
    return out


def _parse_bound_value(text: str, lineno: int) -> float:
    text = text.strip()
    if text in ("inf", "+inf"):
        return math.inf
    if text == "-inf":
        return -math.inf
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"expected a number, got {text!r}", line=lineno) from None


def _parse_expr(tokens: list[str], lineno: int) -> tuple[dict[str, float], float]:
    """Parse `[+-] [coef] name ...` plus bare constants into (terms, constant)."""
    terms: dict[str, float] = {}
    constant = 0.0
    sign = 1.0
    idx = 0
    while idx < len(tokens):
        tok = tokens[idx]
        if tok == "+":
            idx += 1
            continue
        if tok == "-":
            sign = -sign
            idx += 1
            continue
        if _NAME_RE.match(tok) and tok not in ("inf",):
            terms[tok] = terms.get(tok, 0.0) + sign
            sign = 1.0
            idx += 1
            continue
        try:
            value = float(tok) if tok != "inf" else math.inf
        except ValueError:
            raise ParseError(f"unexpected token {tok!r} in expression", line=lineno) from None
        nxt = tokens[idx + 1] if idx + 1 < len(tokens) else None
        if nxt is not None and _NAME_RE.match(nxt) and nxt != "inf":
            terms[nxt] = terms.get(nxt, 0.0) + sign * value
            idx += 2
        else:
            constant += sign * value
            idx += 1
        sign = 1.0
    return {k: v for k, v in terms.items() if v != 0.0}, constant


def parse_lp(text: str) -> MilpModel:
    """Parse LP text produced by :func:`lp_format` back into a model."""
    m = MilpModel()
    section = None
    sense = None
    obj_terms: dict[str, float] = {}
    obj_const = 0.0
    rows: list[tuple[str, dict[str, float], float, Rel, float, int]] = []
    bounds: dict[str, tuple[float, float]] = {}
    order: list[str] = []
    binaries: set[str] = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        lowered = line.lower()
        if lowered in ("maximize", "minimize"):
            sense = "max" if lowered == "maximize" else "min"
            section = "objective"
            continue
        if lowered == "subject to":
            section = "rows"
            continue
        if lowered == "bounds":
            section = "bounds"
            continue
        if lowered == "binary":
            section = "binary"
            continue
        if lowered == "end":
            section = "end"
            continue
        if section == "objective":
            body = line.split(":", 1)[1] if ":" in line else line
            terms, const = _parse_expr(_tokenize(body, lineno), lineno)
            for name, coef in terms.items():
                obj_terms[name] = obj_terms.get(name, 0.0) + coef
            obj_const += const
        elif section == "rows":
            if ":" not in line:
                raise ParseError("constraint row missing 'name:' prefix", line=lineno)
            label, body = line.split(":", 1)
            tokens = _tokenize(body, lineno)
            rel_pos = next((i for i, t in enumerate(tokens) if t in ("<=", ">=", "=")), None)
            if rel_pos is None:
                raise ParseError("constraint row missing relation", line=lineno)
            rel = Rel(tokens[rel_pos])
            lhs_terms, lhs_const = _parse_expr(tokens[:rel_pos], lineno)
            rhs_terms, rhs_const = _parse_expr(tokens[rel_pos + 1 :], lineno)
            if rhs_terms:
                raise ParseError("variables on the right-hand side are not supported", line=lineno)
            rows.append((label.strip(), lhs_terms, lhs_const, rel, rhs_const, lineno))
        elif section == "bounds":
            parts = line.split("<=")
            if len(parts) != 3:
                raise ParseError("bounds lines must read 'lo <= name <= hi'", line=lineno)
            lo = _parse_bound_value(parts[0], lineno)
            hi = _parse_bound_value(parts[2], lineno)
            name = parts[1].strip()
            if not _NAME_RE.match(name):
                raise ParseError(f"invalid variable name {name!r}", line=lineno)
            bounds[name] = (lo, hi)
            if name not in order:
                order.append(name)
        elif section == "binary":
            for tok in _tokenize(line, lineno):
                if not _NAME_RE.match(tok):
                    raise ParseError(f"invalid binary name {tok!r}", line=lineno)
                binaries.add(tok)
        elif section is None:
            raise ParseError(f"content before the objective section: {line!r}", line=lineno)

    if sense is None:
        raise ParseError("no objective section found")

    for name in order:
        lo, hi = bounds[name]
        m.add_variable(name, lo, hi, binary=name in binaries)

    def ensure(name: str, lineno: int):
        if name not in m._by_name:
            # variable appeared in a row/objective but not in Bounds
            m.add_variable(name, -math.inf, math.inf, binary=name in binaries)
        return m.var_id(name)

    for label, terms, const, rel, rhs, lineno in rows:
        expr = AffineExpr({ensure(n, lineno): c for n, c in terms.items()}, const)
        m.add_row(label, expr, rel, rhs, RowOrigin("global"))
    obj = AffineExpr({ensure(n, 0): c for n, c in obj_terms.items()}, obj_const)
    m.set_objective(sense, obj)
    return m


def parse_lp_file(path) -> MilpModel:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_lp(fh.read())
