"""Structured text format for GDP models: parser and canonical emitter.

The format is line oriented.  `#` starts a comment.  Directives:

    model NAME
    variable NAME LO HI
    objective max|min EXPR
    constraint LABEL: EXPR RELOP EXPR          (global constraint)
    disjunction NAME [parent HOST/IDX]
      disjunct INDICATOR
        LABEL: EXPR RELOP EXPR
      ...
    end
    exactly  N|INDICATOR IND1 IND2 ...
    atleast  N IND1 IND2 ...
    atmost   N IND1 IND2 ...
    proposition LABEL: LOGIC

Constraint expressions use numbers, variable names, + - *, parentheses and ^
with integer exponents; juxtaposition multiplies (`2 x1` equals `2*x1`).
Logic expressions use not/and/or/implies/iff with that precedence order,
implies associating to the right.  Nested disjunctions are declared top-level
with a `parent` clause naming the host disjunction and 1-based disjunct
index.  Emission is canonical (declaration order, fixed spacing), so
parse(emit(model)) reproduces the model structurally and emit is idempotent.
"""

from __future__ import annotations

import re

from .errors import ModelError, ParseError
from .expr import (
    AffineExpr,
    NlConst,
    NlExpr,
    NlPow,
    NlProd,
    NlSum,
    NlVar,
    Rel,
    affine_from_nl,
)
from .logic import And, Iff, Implies, Lit, Not, Or, Proposition
from .model import Disjunction, GdpModel

_EXPR_TOKEN = re.compile(
    r"\s*(\*|\+|-|\^|\(|\)|<=|>=|==|=|[A-Za-z_][A-Za-z0-9_.]*|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
)
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*$")


def _num(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _tokenize_expr(text: str, lineno: int) -> list[str]:
    out = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        match = _EXPR_TOKEN.match(text, pos)
        if not match:
            raise ParseError(
                f"unexpected character {text[pos:].lstrip()[0]!r} in expression",
                line=lineno,
                col=pos + 1,
            )
        out.append(match.group(1))
        pos = match.end()
    return out


class _ExprParser:
    """Recursive-descent parser for the arithmetic grammar; produces an
    NlExpr tree that callers fold back to affine where possible."""

    def __init__(self, tokens: list[str], lineno: int):
        self.tokens = tokens
        self.pos = 0
        self.lineno = lineno

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def parse(self) -> NlExpr:
        expr = self.expr()
        if self.peek() is not None:
            raise ParseError(f"trailing token {self.peek()!r}", line=self.lineno)
        return expr

    def expr(self) -> NlExpr:
        parts = [self.term()]
        while self.peek() in ("+", "-"):
            op = self.take()
            rhs = self.term()
            if op == "-":
                rhs = NlProd((NlConst(-1.0), rhs))
            parts.append(rhs)
        return parts[0] if len(parts) == 1 else NlSum(tuple(parts))

    def term(self) -> NlExpr:
        parts = [self.factor()]
        while True:
            tok = self.peek()
            if tok == "*":
                self.take()
                parts.append(self.factor())
            elif tok is not None and (tok == "(" or _NAME.match(tok) or tok[0].isdigit() or tok[0] == "."):
                parts.append(self.factor())  # juxtaposition multiplies
            else:
                break
        return parts[0] if len(parts) == 1 else NlProd(tuple(parts))

    def factor(self) -> NlExpr:
        negate = False
        while self.peek() in ("+", "-"):
            if self.take() == "-":
                negate = not negate
        atom = self.atom()
        if self.peek() == "^":
            self.take()
            exp_tok = self.take()
            if exp_tok is None or not re.fullmatch(r"\d+", exp_tok):
                raise ParseError("exponent must be a nonnegative integer", line=self.lineno)
            atom = NlPow(atom, int(exp_tok))
        return NlProd((NlConst(-1.0), atom)) if negate else atom

    def atom(self) -> NlExpr:
        tok = self.take()
        if tok is None:
            raise ParseError("unexpected end of expression", line=self.lineno)
        if tok == "(":
            inner = self.expr()
            if self.take() != ")":
                raise ParseError("missing closing parenthesis", line=self.lineno)
            return inner
        if _NAME.match(tok):
            return NlVar(("name", tok))  # resolved to an id afterwards
        try:
            return NlConst(float(tok))
        except ValueError:
            raise ParseError(f"unexpected token {tok!r}", line=self.lineno) from None


def _resolve_names(expr: NlExpr, model: GdpModel, lineno: int) -> NlExpr:
    if isinstance(expr, NlVar):
        tag, name = expr.var
        if name not in model._var_by_name:
            raise ParseError(f"unknown variable '{name}'", line=lineno)
        return NlVar(model._var_by_name[name])
    if isinstance(expr, NlConst):
        return expr
    if isinstance(expr, NlSum):
        return NlSum(tuple(_resolve_names(ch, model, lineno) for ch in expr.children))
    if isinstance(expr, NlProd):
        return NlProd(tuple(_resolve_names(ch, model, lineno) for ch in expr.children))
    if isinstance(expr, NlPow):
        return NlPow(_resolve_names(expr.base, model, lineno), expr.exponent)
    raise ParseError("unsupported expression node", line=lineno)


def _parse_side(tokens: list[str], model: GdpModel, lineno: int):
    tree = _ExprParser(tokens, lineno).parse()
    tree = _resolve_names(tree, model, lineno)
    affine = affine_from_nl(tree)
    return tree, affine


def parse_constraint_line(body: str, model: GdpModel, lineno: int):
    """'LABEL: EXPR RELOP EXPR' -> (label, body expr, rel, rhs)."""
    if ":" not in body:
        raise ParseError("constraint needs a 'label:' prefix", line=lineno)
    label, rest = body.split(":", 1)
    label = label.strip()
    if not _NAME.match(label):
        raise ParseError(f"invalid constraint label {label!r}", line=lineno)
    tokens = _tokenize_expr(rest, lineno)
    rel_pos = [i for i, t in enumerate(tokens) if t in ("<=", ">=", "=", "==")]
    if len(rel_pos) != 1:
        raise ParseError("constraint needs exactly one relation", line=lineno)
    i = rel_pos[0]
    rel = Rel.EQ if tokens[i] in ("=", "==") else Rel(tokens[i])
    ltree, laff = _parse_side(tokens[:i], model, lineno)
    rtree, raff = _parse_side(tokens[i + 1 :], model, lineno)
    if laff is not None and raff is not None:
        diff = laff - raff
        return label, AffineExpr(diff.terms), rel, -diff.constant
    if raff is not None and raff.is_constant():
        return label, ltree, rel, raff.constant
    body_nl = NlSum((ltree, NlProd((NlConst(-1.0), rtree))))
    return label, body_nl, rel, 0.0


# -- logic expression grammar ----------------------------------------------------

_LOGIC_TOKEN = re.compile(r"\s*(\(|\)|[A-Za-z_][A-Za-z0-9_.]*)")
_KEYWORDS = ("not", "and", "or", "implies", "iff")


class _LogicParser:
    def __init__(self, text: str, lineno: int):
        self.tokens = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            match = _LOGIC_TOKEN.match(text, pos)
            if not match:
                raise ParseError(
                    f"unexpected character {text[pos:].lstrip()[0]!r} in proposition",
                    line=lineno,
                )
            self.tokens.append(match.group(1))
            pos = match.end()
        self.pos = 0
        self.lineno = lineno

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def parse(self) -> Proposition:
        p = self.iff()
        if self.peek() is not None:
            raise ParseError(f"trailing token {self.peek()!r}", line=self.lineno)
        return p

    def iff(self) -> Proposition:
        p = self.implies()
        while self.peek() == "iff":
            self.take()
            p = Iff(p, self.implies())
        return p

    def implies(self) -> Proposition:
        p = self.or_()
        if self.peek() == "implies":
            self.take()
            return Implies(p, self.implies())  # right associative
        return p

    def or_(self) -> Proposition:
        parts = [self.and_()]
        while self.peek() == "or":
            self.take()
            parts.append(self.and_())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def and_(self) -> Proposition:
        parts = [self.unary()]
        while self.peek() == "and":
            self.take()
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def unary(self) -> Proposition:
        if self.peek() == "not":
            self.take()
            child = self.unary()
            if isinstance(child, Lit):
                return Lit(child.ind, not child.negated)
            return Not(child)
        tok = self.take()
        if tok == "(":
            inner = self.iff()
            if self.take() != ")":
                raise ParseError("missing closing parenthesis", line=self.lineno)
            return inner
        if tok is None or tok in _KEYWORDS or not _NAME.match(tok):
            raise ParseError(f"expected an indicator name, got {tok!r}", line=self.lineno)
        return Lit(tok)


def parse_proposition(text: str, lineno: int = 0) -> Proposition:
    return _LogicParser(text, lineno).parse()


# -- whole-file parser -------------------------------------------------------------


def parse_model(text: str) -> GdpModel:
    model = GdpModel()
    block: dict | None = None  # open disjunction block

    def close_block(lineno):
        nonlocal block
        if block is None:
            raise ParseError("'end' outside a disjunction block", line=lineno)
        if not block["disjuncts"]:
            raise ParseError(f"disjunction '{block['name']}' has no disjuncts", line=lineno)
        try:
            model.add_disjunction(
                block["name"],
                [cons for _ind, cons in block["disjuncts"]],
                parent=block["parent"],
                indicator_names=[ind for ind, _cons in block["disjuncts"]],
            )
        except ModelError as exc:
            raise ParseError(str(exc), line=lineno) from None
        block = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        words = line.split()
        head = words[0]
        try:
            if block is not None and head not in ("disjunct", "end"):
                if not block["disjuncts"]:
                    raise ParseError("expected 'disjunct' line", line=lineno)
                label, body, rel, rhs = parse_constraint_line(line.strip(), model, lineno)
                block["disjuncts"][-1][1].append(model.constraint(label, body, rel, rhs))
                continue
            if head == "model":
                if len(words) != 2:
                    raise ParseError("usage: model NAME", line=lineno)
                model.name = words[1]
            elif head == "variable":
                if len(words) != 4:
                    raise ParseError("usage: variable NAME LO HI", line=lineno)
                try:
                    lo, hi = float(words[2]), float(words[3])
                except ValueError:
                    raise ParseError("variable bounds must be numbers", line=lineno) from None
                model.add_variable(words[1], lo, hi)
            elif head == "objective":
                if len(words) < 3 or words[1] not in ("max", "min"):
                    raise ParseError("usage: objective max|min EXPR", line=lineno)
                tokens = _tokenize_expr(line.split(None, 2)[2], lineno)
                _tree, affine = _parse_side(tokens, model, lineno)
                if affine is None:
                    raise ParseError("objective must be affine", line=lineno)
                model.set_objective(words[1], affine)
            elif head == "constraint":
                body = line.split(None, 1)[1]
                label, expr, rel, rhs = parse_constraint_line(body, model, lineno)
                model.add_constraint(label, expr, rel, rhs)
            elif head == "disjunction":
                parent = None
                if len(words) == 4 and words[2] == "parent":
                    host, _, idx = words[3].partition("/")
                    if not idx.isdigit():
                        raise ParseError("parent must read HOST/INDEX", line=lineno)
                    parent = (host, int(idx))
                elif len(words) != 2:
                    raise ParseError("usage: disjunction NAME [parent HOST/IDX]", line=lineno)
                block = {"name": words[1], "parent": parent, "disjuncts": [], "line": lineno}
            elif head == "disjunct":
                if block is None:
                    raise ParseError("'disjunct' outside a disjunction block", line=lineno)
                if len(words) != 2:
                    raise ParseError("usage: disjunct INDICATOR", line=lineno)
                block["disjuncts"].append((words[1], []))
            elif head == "end":
                close_block(lineno)
            elif head in ("exactly", "atleast", "atmost"):
                if len(words) < 3:
                    raise ParseError(f"usage: {head} COUNT IND1 [IND2 ...]", line=lineno)
                count: int | str = int(words[1]) if words[1].lstrip("-").isdigit() else words[1]
                if isinstance(count, int) and count < 0:
                    raise ParseError("cardinality count must be nonnegative", line=lineno)
                model.choose(count, words[2:], mode=head)
            elif head == "proposition":
                body = line.split(None, 1)[1]
                if ":" not in body:
                    raise ParseError("proposition needs a 'label:' prefix", line=lineno)
                label, rest = body.split(":", 1)
                prop = parse_proposition(rest, lineno)
                model.add_proposition(prop, label.strip())
            else:
                raise ParseError(f"unknown directive '{head}'", line=lineno)
        except ModelError as exc:
            raise ParseError(str(exc), line=lineno) from None
    if block is not None:
        raise ParseError(
            f"disjunction '{block['name']}' is missing its 'end'", line=block["line"]
        )
    return model


# -- canonical emitter ---------------------------------------------------------------


def _affine_text(expr: AffineExpr, names: dict[int, str], constant: float | None = None) -> str:
    parts = []
    for vid in sorted(expr.terms):
        coef = expr.terms[vid]
        mag = abs(coef)
        body = names[vid] if mag == 1.0 else f"{_num(mag)}*{names[vid]}"
        if not parts:
            parts.append(body if coef > 0 else f"-{body}")
        else:
            parts.append(("+ " if coef > 0 else "- ") + body)
    const = expr.constant if constant is None else constant
    if const != 0.0 or not parts:
        if not parts:
            parts.append(_num(const))
        else:
            parts.append(("+ " if const > 0 else "- ") + _num(abs(const)))
    return " ".join(parts)


def _nl_text(expr: NlExpr, names: dict[int, str], parent: str = "sum") -> str:
    if isinstance(expr, NlConst):
        text = _num(expr.value)
        return f"({text})" if expr.value < 0 and parent in ("prod", "pow") else text
    if isinstance(expr, NlVar):
        return names[expr.var]
    if isinstance(expr, NlSum):
        text = " + ".join(_nl_text(ch, names, "sum") for ch in expr.children)
        return f"({text})" if parent in ("prod", "pow") else text
    if isinstance(expr, NlProd):
        text = "*".join(_nl_text(ch, names, "prod") for ch in expr.children)
        return f"({text})" if parent == "pow" else text
    if isinstance(expr, NlPow):
        return f"{_nl_text(expr.base, names, 'pow')}^{expr.exponent}"
    raise ModelError("scale-substituted expressions cannot be written to model files")


_PREC = {"iff": 1, "implies": 2, "or": 3, "and": 4, "not": 5, "lit": 6}


def _logic_text(p: Proposition, parent_prec: int = 0) -> str:
    if isinstance(p, Lit):
        return ("not " + p.ind) if p.negated else p.ind
    if isinstance(p, Not):
        text = "not " + _logic_text(p.child, _PREC["not"])
        return f"({text})" if parent_prec > _PREC["not"] else text
    if isinstance(p, And):
        text = " and ".join(_logic_text(c, _PREC["and"]) for c in p.children)
        return f"({text})" if parent_prec > _PREC["and"] else text
    if isinstance(p, Or):
        text = " or ".join(_logic_text(c, _PREC["or"]) for c in p.children)
        return f"({text})" if parent_prec > _PREC["or"] else text
    if isinstance(p, Implies):
        text = (
            _logic_text(p.lhs, _PREC["implies"] + 1)
            + " implies "
            + _logic_text(p.rhs, _PREC["implies"])
        )
        return f"({text})" if parent_prec > _PREC["implies"] else text
    if isinstance(p, Iff):
        text = _logic_text(p.lhs, _PREC["iff"]) + " iff " + _logic_text(p.rhs, _PREC["iff"] + 1)
        return f"({text})" if parent_prec > _PREC["iff"] else text
    raise ModelError(f"cannot render proposition node {type(p).__name__}")


def emit_model(model: GdpModel) -> str:
    names = {v.id: v.name for v in model.variables}

    def con_text(con) -> str:
        if isinstance(con.body, AffineExpr):
            body = _affine_text(AffineExpr(con.body.terms), names)
            rhs = con.rhs - con.body.constant
        else:
            body = _nl_text(con.body, names)
            rhs = con.rhs
        return f"{con.label}: {body} {con.rel.value} {_num(rhs)}"

    lines = [f"model {model.name}", ""]
    for v in model.variables:
        lines.append(f"variable {v.name} {_num(v.lower)} {_num(v.upper)}")
    if model.objective is not None:
        sense, obj = model.objective
        lines.append("")
        lines.append(f"objective {sense} {_affine_text(obj, names)}")
    if model.global_constraints:
        lines.append("")
        for con in model.global_constraints:
            lines.append(f"constraint {con_text(con)}")
    for dis in model.all_disjunctions():
        lines.append("")
        if dis.parent is None:
            lines.append(f"disjunction {dis.name}")
        else:
            lines.append(f"disjunction {dis.name} parent {dis.parent[0]}/{dis.parent[1]}")
        for dj in dis.disjuncts:
            lines.append(f"  disjunct {dj.indicator}")
            for con in dj.constraints:
                lines.append(f"    {con_text(con)}")
        lines.append("end")
    if model.cardinalities:
        lines.append("")
        for card in model.cardinalities:
            count = card.count if isinstance(card.count, str) else _num(card.count)
            lines.append(f"{card.mode} {count} " + " ".join(card.indicators))
    if model.propositions:
        lines.append("")
        for label, prop in model.propositions:
            lines.append(f"proposition {label}: {_logic_text(prop)}")
    return "\n".join(lines) + "\n"
