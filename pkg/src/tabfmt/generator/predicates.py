"""Bottom-up predicate enumeration from column properties.

Every emitted predicate names the target column explicitly and type-checks
against it, so the beam can combine them freely.
"""

from __future__ import annotations

import datetime as dt
import re

from ..dsl.nodes import (
    Between,
    Cmp,
    ColumnRef,
    Const,
    DateWindow,
    GeneralPred,
    IsToday,
    Predicate,
    TextPred,
    WINDOW_NAMES,
    YearEquals,
)
from ..table import CellType, Table, TargetColumn

_TOKEN_RE = re.compile(r"[A-Za-z0-9]+")


def _round_near(x: float) -> list[float]:
    """Round constants near an anchor: integer and 1-2 significant digits."""
    out = {float(round(x))}
    if x != 0:
        for digits in (1, 2):
            magnitude = len(str(int(abs(x)))) if abs(x) >= 1 else 0
            out.add(float(round(x, digits - magnitude)))
    return sorted(v for v in out if v == v)


def enumerate_predicates(
    props: dict, table: Table, col: TargetColumn
) -> list[Predicate]:
    header = table.headers[col.index]
    ctype = table.types[col.index]
    ref = ColumnRef(header)
    preds: list[Predicate] = []

    if ctype is CellType.TEXT:
        common = [v for v, _ in props.get("MostCommonValues", [])]
        for v, _ in props.get("Categories", []):
            if v not in common:
                common.append(v)
        seen: set[tuple[str, str]] = set()

        def emit(kind: str, text: str) -> None:
            key = (kind, text.casefold())
            if text and key not in seen:
                seen.add(key)
                preds.append(TextPred(kind, text, header))

        for v in common:
            emit("TextEquals", v)
            for length in (1, 2, 3):
                if len(v) >= length:
                    emit("TextStartsWith", v[:length])
                    emit("TextEndsWith", v[-length:])
            for token in _TOKEN_RE.findall(v):
                emit("TextContains", token)
        if props.get("NumDuplicates", 0) > 0:
            preds.append(GeneralPred("Duplicates", header))
        if props.get("NumUniques", 0) > 0:
            preds.append(GeneralPred("Unique", header))

    elif ctype is CellType.NUMERIC:
        anchors: dict[str, float] = {}
        for key in (
            "AverageValue",
            "MedianValue",
            "10PercentileValue",
            "25PercentileValue",
            "75PercentileValue",
            "90PercentileValue",
        ):
            if key in props:
                anchors[key] = float(props[key])
        constants: list[float] = []
        for v in anchors.values():
            for c in [v] + _round_near(v):
                if c not in constants:
                    constants.append(c)
        for c in constants:
            for op in (">", ">=", "<", "<="):
                preds.append(Cmp(ref, op, Const(c)))
        if "25PercentileValue" in anchors and "75PercentileValue" in anchors:
            lo, hi = anchors["25PercentileValue"], anchors["75PercentileValue"]
            if lo <= hi:
                preds.append(Between(lo, hi, ref))

    elif ctype is CellType.DATE:
        for name in WINDOW_NAMES:
            preds.append(DateWindow(name, header))
        preds.append(IsToday(header))
        years = sorted(
            {
                c.parsed.year
                for c in table.columns[col.index]
                if isinstance(c.parsed, dt.date)
            }
        )
        for y in years:
            preds.append(YearEquals(y, header))

    if props.get("NumBlanks", 0) > 0:
        preds.append(GeneralPred("Blanks", header))
    if props.get("NumErrors", 0) > 0:
        preds.append(GeneralPred("IsError", header))
    if props.get("NumNA", 0) > 0:
        preds.append(GeneralPred("IsNA", header))
    return preds
