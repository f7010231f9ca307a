"""Static per-column properties that seed predicate enumeration and the
text-generation prompt.

Every column gets the general properties (error/blank/formula/logical/NA/
duplicate/unique/date/formatted counts); numeric columns add order
statistics and skew, date columns add calendar-window counts and the modal
year, text columns add common values, duplicated values, category detection
and free-text detection. Blanks never participate in statistics.
"""

from __future__ import annotations

import datetime as dt
import enum
import json
from collections import Counter

import numpy as np
from scipy import stats

from .dates import month_bounds, parse_date, shift_month, shift_week, week_bounds
from .dsl.evaluate import ERROR_LITERALS, NA_LITERALS
from .table import Cell, CellType, Table, TargetColumn, value_key

DEFAULT_K = 5


class TextShape(enum.Enum):
    CATEGORICAL = "Categorical"
    FREE_TEXT = "FreeText"
    NEITHER = "Neither"


def classify_text_shape(values: list[str]) -> TextShape:
    """Categorical when few distinct values over enough rows; free text when
    cells are long and mostly distinct."""
    m = len(values)
    present = [v.strip() for v in values if v.strip()]
    distinct = {v.casefold() for v in present}
    if m >= 10 and len(distinct) <= max(10, 0.1 * m):
        return TextShape.CATEGORICAL
    if present:
        avg_tokens = sum(len(v.split()) for v in present) / len(present)
        if avg_tokens > 5 and len(distinct) / len(present) > 0.9:
            return TextShape.FREE_TEXT
    return TextShape.NEITHER


def _ranked_counts(cells: list[Cell], k: int) -> list[tuple[str, int]]:
    """(display value, count) pairs, descending count, ties by first
    appearance, truncated to k."""
    counts: Counter = Counter()
    first_seen: dict[object, int] = {}
    display: dict[object, str] = {}
    for i, cell in enumerate(cells):
        if cell.is_blank:
            continue
        key = value_key(cell)
        counts[key] += 1
        if key not in first_seen:
            first_seen[key] = i
            display[key] = cell.value.strip()
    ordered = sorted(counts, key=lambda key: (-counts[key], first_seen[key]))
    return [(display[key], counts[key]) for key in ordered[:k]]


def extract_properties(
    table: Table,
    col: TargetColumn,
    k: int = DEFAULT_K,
    today: dt.date | None = None,
) -> dict:
    if k < 1:
        raise ValueError("k must be at least 1")
    today = today if today is not None else dt.date.today()
    cells = list(table.columns[col.index])
    ctype = table.types[col.index]
    present = [c for c in cells if not c.is_blank]

    props: dict = {}
    props["NumErrors"] = sum(
        1 for c in cells if c.value.strip().upper() in ERROR_LITERALS
    )
    props["NumBlanks"] = sum(1 for c in cells if c.is_blank)
    formula_counts: Counter = Counter()
    formula_first: dict[str, int] = {}
    for i, c in enumerate(cells):
        if c.formula:
            formula_counts[c.formula] += 1
            formula_first.setdefault(c.formula, i)
    props["Formulas"] = [
        [f, formula_counts[f]]
        for f in sorted(formula_counts, key=lambda f: (-formula_counts[f], formula_first[f]))[:k]
    ]
    props["NumLogicals"] = sum(
        1 for c in cells if c.value.strip().casefold() in ("true", "false")
    )
    props["NumNA"] = sum(1 for c in cells if c.value.strip().casefold() in NA_LITERALS)
    key_counts = Counter(value_key(c) for c in present)
    props["NumDuplicates"] = sum(1 for c in present if key_counts[value_key(c)] > 1)
    props["NumUniques"] = len(key_counts)
    props["NumDate"] = sum(1 for c in cells if parse_date(c.value) is not None)
    props["NumFormatted"] = sum(1 for c in cells if not c.format.is_empty())

    if ctype is CellType.NUMERIC:
        values = [c.parsed for c in present if isinstance(c.parsed, float)]
        if values:
            arr = np.array(values, dtype=float)
            props["AverageValue"] = float(arr.mean())
            props["MedianValue"] = float(np.percentile(arr, 50))
            for q in (90, 75, 25, 10):
                props[f"{q}PercentileValue"] = float(np.percentile(arr, q))
            if len(values) >= 3 and float(arr.std()) > 0:
                props["Skew"] = float(stats.skew(arr, bias=False))
    elif ctype is CellType.DATE:
        dates = [c.parsed for c in present if isinstance(c.parsed, dt.date)]
        windows = {
            "InLastWeek": week_bounds(shift_week(today, -1)),
            "InThisWeek": week_bounds(today),
            "InNextWeek": week_bounds(shift_week(today, 1)),
            "InLastMonth": month_bounds(shift_month(today, -1)),
            "InThisMonth": month_bounds(today),
            "InNextMonth": month_bounds(shift_month(today, 1)),
        }
        for name, (lo, hi) in windows.items():
            props[name] = sum(1 for d in dates if lo <= d <= hi)
        props["Today"] = sum(1 for d in dates if d == today)
        if dates:
            year_counts = Counter(d.year for d in dates)
            first_by_year: dict[int, int] = {}
            for i, d in enumerate(dates):
                first_by_year.setdefault(d.year, i)
            props["Year"] = min(
                year_counts, key=lambda y: (-year_counts[y], first_by_year[y])
            )
    else:
        props["MostCommonValues"] = [list(p) for p in _ranked_counts(cells, k)]
        dup_ranked = [
            [v, n] for v, n in _ranked_counts(cells, len(cells) or 1) if n > 1
        ]
        props["DuplicatesValues"] = dup_ranked[:k]
        shape = classify_text_shape([c.value for c in cells])
        if shape is TextShape.CATEGORICAL:
            all_ranked = _ranked_counts(cells, len(cells) or 1)
            props["Categories"] = [list(p) for p in all_ranked[:k]]
        props["FreeText"] = shape is TextShape.FREE_TEXT
        lengths = [len(c.value.strip()) for c in present]
        if lengths:
            props["AverageLength"] = sum(lengths) / len(lengths)

    return props


def props_to_json(props: dict) -> str:
    """Stable JSON document; embedded verbatim in prompts and debug output."""
    return json.dumps(props, sort_keys=True, separators=(", ", ": "))
