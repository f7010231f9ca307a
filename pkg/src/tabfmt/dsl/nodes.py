"""Condition AST: typed predicates in disjunctive normal form, plus the
canonical printer.

Predicates carry the column they test; `col=None` means the target column
of the suggestion request. Numeric comparisons reference columns explicitly
through their expressions instead.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

from ..table import Format

MAX_CLAUSES = 5
MAX_LITERALS = 5
MAX_EXPR_DEPTH = 4

CMP_OPS = (">", ">=", "<", "<=", "=", "!=")

# Spreadsheet-style date window tests, all parameterless besides the column.
WINDOW_NAMES = (
    "InLastWeek",
    "InThisWeek",
    "InNextWeek",
    "InLastMonth",
    "InThisMonth",
    "InNextMonth",
)


# --- numeric expressions ---------------------------------------------------

@dataclass(frozen=True)
class ColumnRef:
    header: str


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Add:
    left: "NumExpr"
    right: "NumExpr"


@dataclass(frozen=True)
class Sub:
    left: "NumExpr"
    right: "NumExpr"


NumExpr = ColumnRef | Const | Add | Sub


def expr_depth(e: NumExpr) -> int:
    if isinstance(e, (ColumnRef, Const)):
        return 1
    return 1 + max(expr_depth(e.left), expr_depth(e.right))


def expr_columns(e: NumExpr) -> set[str]:
    if isinstance(e, ColumnRef):
        return {e.header}
    if isinstance(e, Const):
        return set()
    return expr_columns(e.left) | expr_columns(e.right)


def expr_constants(e: NumExpr) -> list[float]:
    if isinstance(e, Const):
        return [e.value]
    if isinstance(e, ColumnRef):
        return []
    return expr_constants(e.left) + expr_constants(e.right)


# --- predicates ------------------------------------------------------------

@dataclass(frozen=True)
class TextPred:
    """One of TextEquals / TextStartsWith / TextEndsWith / TextContains."""

    kind: str
    text: str
    col: str | None = None


@dataclass(frozen=True)
class Cmp:
    left: NumExpr
    op: str
    right: NumExpr

    def __post_init__(self) -> None:
        if self.op not in CMP_OPS:
            raise ValueError(f"unknown comparison operator {self.op!r}")


@dataclass(frozen=True)
class Between:
    """Inclusive numeric range test. `expr=None` tests the target column."""

    lo: float
    hi: float
    expr: NumExpr | None = None


@dataclass(frozen=True)
class DateCmp:
    """kind is DateBefore (strictly earlier) or DateAfter (strictly later)."""

    kind: str
    date: dt.date
    col: str | None = None


@dataclass(frozen=True)
class DateWindow:
    """Calendar-window membership test; kind is one of WINDOW_NAMES."""

    kind: str
    col: str | None = None


@dataclass(frozen=True)
class IsToday:
    col: str | None = None


@dataclass(frozen=True)
class YearEquals:
    year: int
    col: str | None = None


@dataclass(frozen=True)
class GeneralPred:
    """kind is one of Blanks / Duplicates / Unique / IsError / IsNA."""

    kind: str
    col: str | None = None


Predicate = TextPred | Cmp | Between | DateCmp | DateWindow | IsToday | YearEquals | GeneralPred

TEXT_KINDS = ("TextEquals", "TextStartsWith", "TextEndsWith", "TextContains")
GENERAL_KINDS = ("Blanks", "Duplicates", "Unique", "IsError", "IsNA")


@dataclass(frozen=True)
class Literal:
    pred: Predicate
    negated: bool = False

    def negate(self) -> "Literal":
        return Literal(self.pred, not self.negated)


@dataclass(frozen=True)
class Condition:
    """DNF: clauses joined by OR, literals within a clause joined by AND."""

    clauses: tuple[tuple[Literal, ...], ...]

    def __post_init__(self) -> None:
        if not self.clauses or any(not cl for cl in self.clauses):
            raise ValueError("conditions need at least one clause and literal")
        if len(self.clauses) > MAX_CLAUSES:
            raise ValueError(f"more than {MAX_CLAUSES} clauses")
        if any(len(cl) > MAX_LITERALS for cl in self.clauses):
            raise ValueError(f"a clause exceeds {MAX_LITERALS} literals")

    def literals(self) -> list[Literal]:
        return [lit for clause in self.clauses for lit in clause]


def single(pred: Predicate, negated: bool = False) -> Condition:
    return Condition(((Literal(pred, negated),),))


@dataclass(frozen=True)
class Rule:
    condition: Condition
    format: Format


# --- canonical printing ----------------------------------------------------

def print_number(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def print_expr(e: NumExpr) -> str:
    if isinstance(e, ColumnRef):
        return f"[@{e.header}]"
    if isinstance(e, Const):
        return print_number(e.value)
    op = "+" if isinstance(e, Add) else "-"
    left = print_expr(e.left)
    right = print_expr(e.right)
    if isinstance(e.right, (Add, Sub)):
        right = f"({right})"
    return f"{left}{op}{right}"


def _col_args(col: str | None) -> list[str]:
    return [f"[@{col}]"] if col is not None else []


def print_predicate(p: Predicate) -> str:
    if isinstance(p, TextPred):
        args = _col_args(p.col) + [_quote(p.text)]
        return f"{p.kind}({', '.join(args)})"
    if isinstance(p, Cmp):
        return f"{print_expr(p.left)}{p.op}{print_expr(p.right)}"
    if isinstance(p, Between):
        args = ([print_expr(p.expr)] if p.expr is not None else []) + [
            print_number(p.lo),
            print_number(p.hi),
        ]
        return f"Between({', '.join(args)})"
    if isinstance(p, DateCmp):
        args = _col_args(p.col) + [p.date.isoformat()]
        return f"{p.kind}({', '.join(args)})"
    if isinstance(p, DateWindow):
        return f"{p.kind}({', '.join(_col_args(p.col))})"
    if isinstance(p, IsToday):
        return f"IsToday({', '.join(_col_args(p.col))})"
    if isinstance(p, YearEquals):
        args = _col_args(p.col) + [str(p.year)]
        return f"YearEquals({', '.join(args)})"
    if isinstance(p, GeneralPred):
        return f"{p.kind}({', '.join(_col_args(p.col))})"
    raise TypeError(f"unknown predicate {p!r}")


def print_literal(lit: Literal) -> str:
    body = print_predicate(lit.pred)
    if lit.negated:
        return f"NOT({body})"
    return body


def print_condition(cond: Condition) -> str:
    multi = len(cond.clauses) > 1
    parts = []
    for clause in cond.clauses:
        text = " AND ".join(print_literal(l) for l in clause)
        if multi and len(clause) > 1:
            text = f"({text})"
        parts.append(text)
    return " OR ".join(parts)
