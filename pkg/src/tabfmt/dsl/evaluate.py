"""Condition evaluation over tables.

An Evaluator binds a condition language to one (table, target column, today)
triple, caches per-literal row masks, and produces ExecutionVectors. Blank
cells fail every predicate except Blanks; negation applies on top of that.
"""

from __future__ import annotations

import base64
import datetime as dt
from collections import Counter
from dataclasses import dataclass

import numpy as np

from ..dates import month_bounds, shift_month, shift_week, week_bounds
from ..table import Cell, CellType, Table, value_key
from .nodes import (
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
    Predicate,
    Sub,
    TextPred,
    YearEquals,
)

ERROR_LITERALS = {"#N/A", "#REF!", "#DIV/0!", "#VALUE!", "#NAME?", "#NULL!", "#NUM!"}
NA_LITERALS = {"na", "n/a"}


class UnknownColumnError(ValueError):
    pass


class TypeMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class ExecutionVector:
    """Boolean row mask, packed big-endian so vectors hash and sort cheaply."""

    bits: bytes
    length: int

    @staticmethod
    def from_bools(values) -> "ExecutionVector":
        arr = np.asarray(values, dtype=bool)
        return ExecutionVector(np.packbits(arr, bitorder="big").tobytes(), int(arr.size))

    def to_numpy(self) -> np.ndarray:
        unpacked = np.unpackbits(
            np.frombuffer(self.bits, dtype=np.uint8), bitorder="big"
        )
        return unpacked[: self.length].astype(bool)

    def to_bools(self) -> list[bool]:
        return self.to_numpy().tolist()

    @property
    def popcount(self) -> int:
        return int(self.to_numpy().sum())

    def to_base64(self) -> str:
        return base64.b64encode(self.bits).decode("ascii")

    @staticmethod
    def from_base64(data: str, length: int) -> "ExecutionVector":
        return ExecutionVector(base64.b64decode(data), length)


class _ColumnData:
    """Per-column caches shared by all predicates."""

    def __init__(self, cells: tuple[Cell, ...], ctype: CellType):
        self.ctype = ctype
        self.cells = cells
        self.blank = np.array([c.is_blank for c in cells], dtype=bool)
        self._numbers: np.ndarray | None = None
        self._dates: list[dt.date | None] | None = None
        self._texts: list[str] | None = None
        self._key_counts: Counter | None = None

    @property
    def numbers(self) -> np.ndarray:
        if self._numbers is None:
            self._numbers = np.array(
                [
                    c.parsed if isinstance(c.parsed, float) else np.nan
                    for c in self.cells
                ],
                dtype=float,
            )
        return self._numbers

    @property
    def dates(self) -> list[dt.date | None]:
        if self._dates is None:
            self._dates = [
                c.parsed if isinstance(c.parsed, dt.date) else None for c in self.cells
            ]
        return self._dates

    @property
    def texts(self) -> list[str]:
        if self._texts is None:
            self._texts = [c.value.strip().casefold() for c in self.cells]
        return self._texts

    @property
    def key_counts(self) -> Counter:
        if self._key_counts is None:
            self._key_counts = Counter(
                value_key(c) for c in self.cells if not c.is_blank
            )
        return self._key_counts


class Evaluator:
    def __init__(self, table: Table, target: int | None = None, today: dt.date | None = None):
        self.table = table
        self.target = target
        self.today = today if today is not None else dt.date.today()
        self._columns: dict[int, _ColumnData] = {}
        self._literal_cache: dict[Literal, np.ndarray] = {}

    # --- resolution and type checking -----------------------------------

    def _resolve(self, col: str | None) -> int:
        if col is None:
            if self.target is None:
                raise UnknownColumnError(
                    "predicate references the target column but none was given"
                )
            return self.target
        idx = self.table.column_index(col)
        if idx is None:
            raise UnknownColumnError(f"unknown column reference [@{col}]")
        return idx

    def _require(self, idx: int, expected: CellType, pred_name: str) -> None:
        actual = self.table.types[idx]
        if actual is not expected:
            raise TypeMismatchError(
                f"{pred_name} needs a {expected.value} column but "
                f"[@{self.table.headers[idx]}] is {actual.value}"
            )

    def _check_expr(self, expr: NumExpr) -> None:
        if isinstance(expr, ColumnRef):
            idx = self._resolve(expr.header)
            self._require(idx, CellType.NUMERIC, "a numeric comparison")
        elif isinstance(expr, (Add, Sub)):
            self._check_expr(expr.left)
            self._check_expr(expr.right)

    def validate(self, cond: Condition) -> None:
        """Resolve all column references and type-check every predicate.
        Raises UnknownColumnError / TypeMismatchError; called once per
        condition, not per row."""
        for lit in cond.literals():
            p = lit.pred
            if isinstance(p, TextPred):
                self._require(self._resolve(p.col), CellType.TEXT, p.kind)
            elif isinstance(p, Cmp):
                self._check_expr(p.left)
                self._check_expr(p.right)
            elif isinstance(p, Between):
                if p.expr is None:
                    self._require(self._resolve(None), CellType.NUMERIC, "Between")
                else:
                    self._check_expr(p.expr)
            elif isinstance(p, (DateCmp, DateWindow, IsToday, YearEquals)):
                name = getattr(p, "kind", type(p).__name__)
                self._require(self._resolve(p.col), CellType.DATE, name)
            elif isinstance(p, GeneralPred):
                self._resolve(p.col)

    # --- evaluation -------------------------------------------------------

    def _column(self, idx: int) -> _ColumnData:
        if idx not in self._columns:
            self._columns[idx] = _ColumnData(self.table.columns[idx], self.table.types[idx])
        return self._columns[idx]

    def _expr_values(self, expr: NumExpr) -> tuple[np.ndarray, np.ndarray]:
        """(values, valid) arrays of length m; blank or unparseable referenced
        cells poison their rows."""
        m = self.table.n_rows
        if isinstance(expr, Const):
            return np.full(m, expr.value), np.ones(m, dtype=bool)
        if isinstance(expr, ColumnRef):
            data = self._column(self._resolve(expr.header))
            values = data.numbers
            return values, ~np.isnan(values)
        lv, lok = self._expr_values(expr.left)
        rv, rok = self._expr_values(expr.right)
        values = lv + rv if isinstance(expr, Add) else lv - rv
        return values, lok & rok

    def _predicate_vector(self, p: Predicate) -> np.ndarray:
        m = self.table.n_rows
        if isinstance(p, Cmp):
            lv, lok = self._expr_values(p.left)
            rv, rok = self._expr_values(p.right)
            ok = lok & rok
            with np.errstate(invalid="ignore"):
                if p.op == ">":
                    res = lv > rv
                elif p.op == ">=":
                    res = lv >= rv
                elif p.op == "<":
                    res = lv < rv
                elif p.op == "<=":
                    res = lv <= rv
                elif p.op == "=":
                    res = lv == rv
                else:
                    res = lv != rv
            return res & ok

        if isinstance(p, Between):
            if p.expr is None:
                data = self._column(self._resolve(None))
                values, ok = data.numbers, ~np.isnan(data.numbers)
            else:
                values, ok = self._expr_values(p.expr)
            with np.errstate(invalid="ignore"):
                res = (values >= p.lo) & (values <= p.hi)
            return res & ok

        if isinstance(p, TextPred):
            data = self._column(self._resolve(p.col))
            needle = p.text.strip().casefold()
            if p.kind == "TextEquals":
                test = lambda s: s == needle
            elif p.kind == "TextStartsWith":
                test = lambda s: s.startswith(needle)
            elif p.kind == "TextEndsWith":
                test = lambda s: s.endswith(needle)
            else:
                test = lambda s: needle in s
            out = np.array([test(s) for s in data.texts], dtype=bool)
            return out & ~data.blank

        if isinstance(p, (DateCmp, DateWindow, IsToday, YearEquals)):
            data = self._column(self._resolve(p.col))
            dates = data.dates
            if isinstance(p, DateCmp):
                if p.kind == "DateBefore":
                    test = lambda d: d < p.date
                else:
                    test = lambda d: d > p.date
            elif isinstance(p, IsToday):
                today = self.today
                test = lambda d: d == today
            elif isinstance(p, YearEquals):
                test = lambda d: d.year == p.year
            else:
                lo, hi = self._window_bounds(p.kind)
                test = lambda d: lo <= d <= hi
            return np.array([d is not None and test(d) for d in dates], dtype=bool)

        if isinstance(p, GeneralPred):
            data = self._column(self._resolve(p.col))
            if p.kind == "Blanks":
                return data.blank.copy()
            if p.kind == "Duplicates":
                counts = data.key_counts
                return np.array(
                    [
                        not c.is_blank and counts[value_key(c)] > 1
                        for c in data.cells
                    ],
                    dtype=bool,
                )
            if p.kind == "Unique":
                counts = data.key_counts
                return np.array(
                    [
                        not c.is_blank and counts[value_key(c)] == 1
                        for c in data.cells
                    ],
                    dtype=bool,
                )
            if p.kind == "IsError":
                return np.array(
                    [c.value.strip().upper() in ERROR_LITERALS for c in data.cells],
                    dtype=bool,
                )
            return np.array(
                [c.value.strip().casefold() in NA_LITERALS for c in data.cells],
                dtype=bool,
            )

        raise TypeError(f"unknown predicate {p!r}")

    def _window_bounds(self, kind: str) -> tuple[dt.date, dt.date]:
        today = self.today
        if kind.endswith("Week"):
            offset = {"InLastWeek": -1, "InThisWeek": 0, "InNextWeek": 1}[kind]
            return week_bounds(shift_week(today, offset))
        offset = {"InLastMonth": -1, "InThisMonth": 0, "InNextMonth": 1}[kind]
        return month_bounds(shift_month(today, offset))

    def literal_vector(self, lit: Literal) -> np.ndarray:
        cached = self._literal_cache.get(lit)
        if cached is None:
            vec = self._predicate_vector(lit.pred)
            cached = ~vec if lit.negated else vec
            self._literal_cache[lit] = cached
        return cached

    def condition_vector(self, cond: Condition) -> np.ndarray:
        self.validate(cond)
        result = np.zeros(self.table.n_rows, dtype=bool)
        for clause in cond.clauses:
            acc = self.literal_vector(clause[0]).copy()
            for lit in clause[1:]:
                acc &= self.literal_vector(lit)
            result |= acc
        return result

    def execute(self, cond: Condition) -> ExecutionVector:
        return ExecutionVector.from_bools(self.condition_vector(cond))

    def fraction(self, cond: Condition) -> float:
        m = self.table.n_rows
        if m == 0:
            return 0.0
        return float(self.condition_vector(cond).sum()) / m


def evaluate(
    cond: Condition,
    table: Table,
    row: int,
    target: int | None = None,
    today: dt.date | None = None,
) -> bool:
    """Single-row evaluation. For repeated queries build an Evaluator."""
    ev = Evaluator(table, target=target, today=today)
    return bool(ev.condition_vector(cond)[row])


def execute(
    cond: Condition,
    table: Table,
    target: int | None = None,
    today: dt.date | None = None,
) -> ExecutionVector:
    return Evaluator(table, target=target, today=today).execute(cond)
