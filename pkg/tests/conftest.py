"""Shared fixtures: a brute-force row-by-row oracle for condition semantics
and seeded random generators for tables and type-valid conditions.

The oracle interprets the condition language directly per row with plain
Python, independently of the vectorized evaluator, so the two can be
compared on random instances.
"""

from __future__ import annotations

import datetime as dt
import random

import pytest

from tabfmt.dsl.nodes import (
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
    Sub,
    TextPred,
    YearEquals,
)
from tabfmt.table import CellType, Table, parse_table

FIXED_TODAY = dt.date(2024, 3, 15)

ERROR_LITERALS = {"#N/A", "#REF!", "#DIV/0!", "#VALUE!", "#NAME?", "#NULL!", "#NUM!"}
NA_LITERALS = {"na", "n/a"}


# --- brute-force oracle --------------------------------------------------------

def _week_bounds(day: dt.date) -> tuple[dt.date, dt.date]:
    start = day - dt.timedelta(days=day.weekday())
    return start, start + dt.timedelta(days=6)


def _month_bounds(day: dt.date) -> tuple[dt.date, dt.date]:
    start = day.replace(day=1)
    if start.month == 12:
        nxt = start.replace(year=start.year + 1, month=1)
    else:
        nxt = start.replace(month=start.month + 1)
    return start, nxt - dt.timedelta(days=1)


def _shift_month(day: dt.date, offset: int) -> dt.date:
    month = day.month - 1 + offset
    year = day.year + month // 12
    return dt.date(year, month % 12 + 1, 1)


def _oracle_number(cell) -> float | None:
    return cell.parsed if isinstance(cell.parsed, float) else None


def _oracle_expr(expr, table: Table, row: int) -> float | None:
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, ColumnRef):
        idx = table.column_index(expr.header)
        return _oracle_number(table.columns[idx][row])
    left = _oracle_expr(expr.left, table, row)
    right = _oracle_expr(expr.right, table, row)
    if left is None or right is None:
        return None
    return left + right if isinstance(expr, Add) else left - right


def _oracle_pred(pred, table: Table, row: int, target: int | None, today: dt.date) -> bool:
    def col_idx(name):
        return table.column_index(name) if name is not None else target

    if isinstance(pred, Cmp):
        left = _oracle_expr(pred.left, table, row)
        right = _oracle_expr(pred.right, table, row)
        if left is None or right is None:
            return False
        return {
            ">": left > right, ">=": left >= right,
            "<": left < right, "<=": left <= right,
            "=": left == right, "!=": left != right,
        }[pred.op]

    if isinstance(pred, Between):
        if pred.expr is None:
            value = _oracle_number(table.columns[target][row])
        else:
            value = _oracle_expr(pred.expr, table, row)
        return value is not None and pred.lo <= value <= pred.hi

    if isinstance(pred, TextPred):
        cell = table.columns[col_idx(pred.col)][row]
        if cell.value.strip() == "":
            return False
        hay = cell.value.strip().casefold()
        needle = pred.text.strip().casefold()
        return {
            "TextEquals": hay == needle,
            "TextStartsWith": hay.startswith(needle),
            "TextEndsWith": hay.endswith(needle),
            "TextContains": needle in hay,
        }[pred.kind]

    if isinstance(pred, (DateCmp, DateWindow, IsToday, YearEquals)):
        cell = table.columns[col_idx(pred.col)][row]
        day = cell.parsed if isinstance(cell.parsed, dt.date) else None
        if day is None:
            return False
        if isinstance(pred, DateCmp):
            return day < pred.date if pred.kind == "DateBefore" else day > pred.date
        if isinstance(pred, IsToday):
            return day == today
        if isinstance(pred, YearEquals):
            return day.year == pred.year
        if pred.kind.endswith("Week"):
            offset = {"InLastWeek": -1, "InThisWeek": 0, "InNextWeek": 1}[pred.kind]
            lo, hi = _week_bounds(today + dt.timedelta(weeks=offset))
        else:
            offset = {"InLastMonth": -1, "InThisMonth": 0, "InNextMonth": 1}[pred.kind]
            lo, hi = _month_bounds(_shift_month(today, offset))
        return lo <= day <= hi

    if isinstance(pred, GeneralPred):
        idx = col_idx(pred.col)
        cell = table.columns[idx][row]
        blank = cell.value.strip() == ""
        if pred.kind == "Blanks":
            return blank
        if pred.kind in ("Duplicates", "Unique"):
            if blank:
                return False

            def key(c):
                if c.ctype is not CellType.TEXT and c.parsed is not None:
                    return c.parsed
                return c.value.strip().casefold()

            count = sum(
                1
                for other in table.columns[idx]
                if other.value.strip() != "" and key(other) == key(cell)
            )
            return count > 1 if pred.kind == "Duplicates" else count == 1
        if pred.kind == "IsError":
            return cell.value.strip().upper() in ERROR_LITERALS
        return cell.value.strip().casefold() in NA_LITERALS

    raise TypeError(f"oracle cannot interpret {pred!r}")


def oracle_evaluate(
    cond: Condition,
    table: Table,
    target: int | None = None,
    today: dt.date = FIXED_TODAY,
) -> list[bool]:
    """Row-by-row truth-table interpretation of a condition in DNF."""
    out = []
    for row in range(table.n_rows):
        hit = False
        for clause in cond.clauses:
            ok = True
            for lit in clause:
                v = _oracle_pred(lit.pred, table, row, target, today)
                if lit.negated:
                    v = not v
                if not v:
                    ok = False
                    break
            if ok:
                hit = True
                break
        out.append(hit)
    return out


# --- random instance generators -------------------------------------------------

_TEXT_VALUES = ("alpha", "Beta", "GAMMA", "delta", "beta", " alpha ", "epsilon",
                "#N/A", "n/a", "", "done", "do")
_NUM_VALUES = ("1", "2", "3.5", "-4", "10", "100", "2", "0", "")
_DATE_VALUES = ("2024-03-11", "2024-03-15", "2024-03-18", "2024-02-29",
                "2024-04-02", "2023-12-31", "2024-03-15", "")


def random_table(rng: random.Random, max_rows: int = 8, max_cols: int = 4) -> Table:
    """Random typed table with blanks, duplicates, case clashes and NA text."""
    n_rows = rng.randint(2, max_rows)
    n_cols = rng.randint(1, max_cols)
    headers, columns = [], []
    for c in range(n_cols):
        kind = rng.choice(("text", "num", "date"))
        pool = {"text": _TEXT_VALUES, "num": _NUM_VALUES, "date": _DATE_VALUES}[kind]
        headers.append(f"{kind.title()}{c}")
        columns.append([rng.choice(pool) for _ in range(n_rows)])
    lines = [",".join(headers)]
    for r in range(n_rows):
        lines.append(",".join(f'"{columns[c][r]}"' for c in range(n_cols)))
    return parse_table("\n".join(lines))


def _columns_of_type(table: Table, ctype: CellType) -> list[int]:
    return [i for i, t in enumerate(table.types) if t is ctype]


def _random_expr(rng: random.Random, numeric_headers: list[str], depth: int = 0):
    roll = rng.random()
    if depth >= 2 or roll < 0.5:
        if roll < 0.25 or not numeric_headers:
            return Const(float(rng.choice((-4, 0, 1, 2, 3, 10, 100))))
        return ColumnRef(rng.choice(numeric_headers))
    cls = Add if rng.random() < 0.5 else Sub
    return cls(
        _random_expr(rng, numeric_headers, depth + 1),
        _random_expr(rng, numeric_headers, depth + 1),
    )


def random_predicate(rng: random.Random, table: Table):
    """A type-valid predicate for `table`, or None when no column fits."""
    text_cols = _columns_of_type(table, CellType.TEXT)
    num_cols = _columns_of_type(table, CellType.NUMERIC)
    date_cols = _columns_of_type(table, CellType.DATE)
    choices = []
    if text_cols:
        choices.append("text")
    if num_cols:
        choices.append("num")
    if date_cols:
        choices.append("date")
    choices.append("general")
    kind = rng.choice(choices)

    if kind == "text":
        col = table.headers[rng.choice(text_cols)]
        return TextPred(
            rng.choice(("TextEquals", "TextStartsWith", "TextEndsWith", "TextContains")),
            rng.choice(("alpha", "beta", "a", "DO", "zz", "")),
            col,
        )
    if kind == "num":
        headers = [table.headers[i] for i in num_cols]
        if rng.random() < 0.7:
            return Cmp(
                _random_expr(rng, headers),
                rng.choice((">", ">=", "<", "<=", "=", "!=")),
                _random_expr(rng, headers),
            )
        lo = rng.choice((-5, 0, 1, 2))
        return Between(float(lo), float(lo + rng.choice((0, 1, 5, 50))),
                       ColumnRef(rng.choice(headers)))
    if kind == "date":
        col = table.headers[rng.choice(date_cols)]
        roll = rng.random()
        if roll < 0.3:
            return DateCmp(rng.choice(("DateBefore", "DateAfter")),
                           dt.date(2024, rng.randint(1, 12), rng.randint(1, 28)), col)
        if roll < 0.7:
            return DateWindow(rng.choice((
                "InLastWeek", "InThisWeek", "InNextWeek",
                "InLastMonth", "InThisMonth", "InNextMonth")), col)
        if roll < 0.85:
            return IsToday(col)
        return YearEquals(rng.choice((2023, 2024)), col)
    col = table.headers[rng.randrange(len(table.headers))]
    return GeneralPred(
        rng.choice(("Blanks", "Duplicates", "Unique", "IsError", "IsNA")), col
    )


def _negatable(pred) -> bool:
    # Negation lives only on Blanks and the text predicates; comparison
    # negation is expressed by flipping the operator instead.
    if isinstance(pred, TextPred):
        return True
    return isinstance(pred, GeneralPred) and pred.kind == "Blanks"


def random_condition(
    rng: random.Random, table: Table, max_clauses: int = 3, max_literals: int = 2
) -> Condition:
    clauses = []
    for _ in range(rng.randint(1, max_clauses)):
        literals = []
        for _ in range(rng.randint(1, max_literals)):
            pred = random_predicate(rng, table)
            negated = _negatable(pred) and rng.random() < 0.3
            literals.append(Literal(pred, negated=negated))
        clauses.append(tuple(literals))
    return Condition(tuple(clauses))


@pytest.fixture
def fig1_table() -> Table:
    csv_text = (
        "Project ID,Status,Budget,Cost\n"
        "P-001,Complete,12000,9500\n"
        "P-002,Pending,8000,9200\n"
        "P-003,Complete,15000,11000\n"
        "P-004,Blocked,7000,7100\n"
        "P-005,Pending,9000,4000\n"
        "P-006,Complete,20000,18500\n"
        "P-007,Draft,5000,200\n"
        "P-008,Blocked,11000,12400\n"
    )
    return parse_table(csv_text)


@pytest.fixture
def status_table() -> Table:
    csv_text = (
        "Status,Qty,Due\n"
        "Complete,5,2024-03-11\n"
        "Pending,2,2024-03-18\n"
        "Blocked,8,2024-02-01\n"
        "Complete,5,2024-03-12\n"
        "Draft,1,2023-11-02\n"
        "Pending,9,2024-03-14\n"
        "Complete,3,2024-03-20\n"
        "Blocked,2,2024-01-15\n"
    )
    return parse_table(csv_text)
