"""Concrete syntax for conditions.

Literals are written `Pred([@Col], args...)` (the column may be omitted to
mean the target column) or as comparisons `expr op expr` over column
references, numbers, `+` and `-`. Connectives are NOT / AND / OR with the
usual binding order; parentheses group. String constants are double-quoted,
dates are bare ISO literals.

Parsing yields a Condition in disjunctive normal form: NOT is pushed down to
literals (comparisons negate by operator flip) and AND distributes over OR.
Conditions that exceed the DNF size bounds are rejected.
"""

from __future__ import annotations

import datetime as dt
import re
from dataclasses import dataclass

from .nodes import (
    MAX_CLAUSES,
    MAX_LITERALS,
    Add,
    Between,
    Cmp,
    ColumnRef,
    Condition,
    Const,
    DateCmp,
    DateWindow,
    GeneralPred,
    IsToday,
    Literal,
    NumExpr,
    Sub,
    TextPred,
    WINDOW_NAMES,
    YearEquals,
)


class ConditionParseError(ValueError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


class DnfBoundError(ConditionParseError):
    """Condition exceeds the DNF size bounds after distribution."""


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<colref>\[@(?P<header>[^\]]*)\])
  | (?P<date>\d{4}-\d{2}-\d{2})
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>>=|<=|!=|<>|==|[><=+\-(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ConditionParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind == "colref":
            tokens.append(_Token("colref", m.group("header"), pos))
        elif kind != "ws":
            tokens.append(_Token(kind, m.group(0), pos))
        pos = m.end()
    tokens.append(_Token("eof", "", len(text)))
    return tokens


def _unquote(text: str) -> str:
    return re.sub(r"\\(.)", r"\1", text[1:-1])


# Intermediate boolean tree before DNF conversion.
@dataclass(frozen=True)
class _Or:
    items: tuple


@dataclass(frozen=True)
class _And:
    items: tuple


@dataclass(frozen=True)
class _Not:
    item: object


class _Fail(Exception):
    """Internal backtracking signal; carries the failure position."""

    def __init__(self, message: str, pos: int):
        self.message = message
        self.pos = pos


_OP_ALIASES = {"==": "=", "<>": "!="}
_FLIP = {">": "<=", "<=": ">", "<": ">=", ">=": "<", "=": "!=", "!=": "="}

_NO_ARG_PREDICATES = set(WINDOW_NAMES) | {"IsToday", "Blanks", "Duplicates", "Unique", "IsError", "IsNA"}
_TEXT_PREDICATES = {"TextEquals", "TextStartsWith", "TextEndsWith", "TextContains"}
_DATE_CMP_PREDICATES = {"DateBefore", "DateAfter"}
_ALL_PREDICATES = (
    _NO_ARG_PREDICATES | _TEXT_PREDICATES | _DATE_CMP_PREDICATES | {"Between", "YearEquals"}
)


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0
        # Deepest failure seen, for a useful final error message.
        self.best_fail: _Fail | None = None

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str) -> None:
        f = _Fail(message, self.peek().pos)
        if self.best_fail is None or f.pos >= self.best_fail.pos:
            self.best_fail = f
        raise f

    def expect_op(self, op: str) -> None:
        tok = self.peek()
        if tok.kind != "op" or tok.text != op:
            self.fail(f"expected {op!r}")
        self.advance()

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "name" and tok.text.upper() == word

    # boolean grammar --------------------------------------------------

    def parse_or(self):
        items = [self.parse_and()]
        while self.at_keyword("OR"):
            self.advance()
            items.append(self.parse_and())
        return items[0] if len(items) == 1 else _Or(tuple(items))

    def parse_and(self):
        items = [self.parse_unary()]
        while self.at_keyword("AND"):
            self.advance()
            items.append(self.parse_unary())
        return items[0] if len(items) == 1 else _And(tuple(items))

    def parse_unary(self):
        if self.at_keyword("NOT"):
            self.advance()
            return _Not(self.parse_unary())
        return self.parse_atom()

    def parse_atom(self):
        tok = self.peek()
        if tok.kind == "name":
            return Literal(self.parse_predicate_call())
        # A leading "(", column ref, number or minus could open either a
        # comparison or a grouped condition; try the comparison first and
        # rewind on failure.
        start = self.pos
        try:
            return Literal(self.parse_comparison())
        except _Fail:
            self.pos = start
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            inner = self.parse_or()
            self.expect_op(")")
            return inner
        self.fail("expected a predicate, comparison or '('")

    # predicate calls ----------------------------------------------------

    def parse_predicate_call(self):
        name_tok = self.advance()
        name = name_tok.text
        if name.upper() in ("AND", "OR", "NOT"):
            self.fail(f"unexpected keyword {name}")
        if name not in _ALL_PREDICATES:
            raise ConditionParseError(f"unknown predicate name {name!r}", name_tok.pos)
        self.expect_op("(")
        args = []
        if not (self.peek().kind == "op" and self.peek().text == ")"):
            args.append(self.parse_arg())
            while self.peek().kind == "op" and self.peek().text == ",":
                self.advance()
                args.append(self.parse_arg())
        self.expect_op(")")
        return self.build_predicate(name, args, name_tok.pos)

    def parse_arg(self):
        tok = self.peek()
        if tok.kind == "string":
            self.advance()
            return _unquote(tok.text)
        if tok.kind == "date":
            self.advance()
            return dt.date.fromisoformat(tok.text)
        return self.parse_num_expr()

    def build_predicate(self, name: str, args: list, pos: int):
        def arity_error():
            raise ConditionParseError(f"wrong arguments for {name}", pos)

        def opt_col(args: list) -> tuple[str | None, list]:
            if args and isinstance(args[0], ColumnRef):
                return args[0].header, args[1:]
            return None, args

        if name in _TEXT_PREDICATES:
            col, rest = opt_col(args)
            if len(rest) != 1 or not isinstance(rest[0], str):
                arity_error()
            return TextPred(name, rest[0], col)
        if name in _DATE_CMP_PREDICATES:
            col, rest = opt_col(args)
            if len(rest) != 1 or not isinstance(rest[0], dt.date):
                arity_error()
            return DateCmp(name, rest[0], col)
        if name == "YearEquals":
            col, rest = opt_col(args)
            if len(rest) != 1 or not isinstance(rest[0], Const) or rest[0].value != int(rest[0].value):
                arity_error()
            return YearEquals(int(rest[0].value), col)
        if name == "Between":
            expr: NumExpr | None = None
            rest = args
            if len(rest) == 3:
                expr, rest = rest[0], rest[1:]
                if not isinstance(expr, (ColumnRef, Const, Add, Sub)):
                    arity_error()
            if len(rest) != 2 or not all(isinstance(a, Const) for a in rest):
                arity_error()
            return Between(rest[0].value, rest[1].value, expr)
        if name in _NO_ARG_PREDICATES:
            col, rest = opt_col(args)
            if rest:
                arity_error()
            if name in WINDOW_NAMES:
                return DateWindow(name, col)
            if name == "IsToday":
                return IsToday(col)
            return GeneralPred(name, col)
        arity_error()

    # numeric expressions -------------------------------------------------

    def parse_comparison(self):
        left = self.parse_num_expr()
        tok = self.peek()
        if tok.kind != "op" or tok.text not in (">", ">=", "<", "<=", "=", "==", "!=", "<>"):
            self.fail("expected a comparison operator")
        self.advance()
        op = _OP_ALIASES.get(tok.text, tok.text)
        right = self.parse_num_expr()
        return Cmp(left, op, right)

    def parse_num_expr(self) -> NumExpr:
        left = self.parse_primary()
        while self.peek().kind == "op" and self.peek().text in ("+", "-"):
            op = self.advance().text
            right = self.parse_primary()
            left = Add(left, right) if op == "+" else Sub(left, right)
        return left

    def parse_primary(self) -> NumExpr:
        tok = self.peek()
        if tok.kind == "colref":
            self.advance()
            return ColumnRef(tok.text)
        if tok.kind == "number":
            self.advance()
            return Const(float(tok.text))
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            inner = self.parse_primary()
            if isinstance(inner, Const):
                return Const(-inner.value)
            return Sub(Const(0.0), inner)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            inner = self.parse_num_expr()
            self.expect_op(")")
            return inner
        self.fail("expected a number, column reference or '('")


# DNF conversion --------------------------------------------------------

def _negate(node):
    if isinstance(node, _Not):
        return node.item
    if isinstance(node, _Or):
        return _And(tuple(_negate(i) for i in node.items))
    if isinstance(node, _And):
        return _Or(tuple(_negate(i) for i in node.items))
    lit: Literal = node
    if isinstance(lit.pred, Cmp) and not lit.negated:
        return Literal(Cmp(lit.pred.left, _FLIP[lit.pred.op], lit.pred.right))
    return lit.negate()


def _to_clauses(node, pos: int) -> list[tuple[Literal, ...]]:
    if isinstance(node, _Not):
        return _to_clauses(_negate(node.item), pos)
    if isinstance(node, Literal):
        return [(node,)]
    if isinstance(node, _Or):
        out: list[tuple[Literal, ...]] = []
        for item in node.items:
            out.extend(_to_clauses(item, pos))
        return _dedupe_clauses(out, pos)
    if isinstance(node, _And):
        acc: list[tuple[Literal, ...]] = [()]
        for item in node.items:
            rhs = _to_clauses(item, pos)
            merged = []
            for a in acc:
                for b in rhs:
                    clause = a + tuple(l for l in b if l not in a)
                    if len(clause) > MAX_LITERALS:
                        raise DnfBoundError(
                            f"condition exceeds {MAX_LITERALS} literals per clause "
                            "after DNF conversion", pos,
                        )
                    merged.append(clause)
            acc = _dedupe_clauses(merged, pos)
        return acc
    raise TypeError(f"unexpected node {node!r}")


def _dedupe_clauses(clauses: list[tuple[Literal, ...]], pos: int) -> list[tuple[Literal, ...]]:
    seen = set()
    out = []
    for clause in clauses:
        key = frozenset(clause)
        if key not in seen:
            seen.add(key)
            out.append(clause)
    if len(out) > MAX_CLAUSES:
        raise DnfBoundError(
            f"condition exceeds {MAX_CLAUSES} clauses after DNF conversion", pos
        )
    return out


def tokenize_condition(text: str) -> list[str]:
    """Token texts of a printed condition, in order. Column references
    collapse to their header so renamed brackets still compare token-wise."""
    return [t.text for t in _tokenize(text) if t.kind != "eof"]


def parse_condition(text: str) -> Condition:
    parser = _Parser(text)
    try:
        tree = parser.parse_or()
        if parser.peek().kind != "eof":
            parser.fail("unexpected trailing input")
    except _Fail:
        best = parser.best_fail
        raise ConditionParseError(best.message, best.pos) from None
    return Condition(tuple(_to_clauses(tree, 0)))
