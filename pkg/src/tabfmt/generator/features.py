"""Numeric features of a (condition, table, column) node for the ranker.

The schema is fixed and versioned; the model file stores the feature names
it was trained with, and scoring refuses a model whose schema differs.
"""

from __future__ import annotations

import numpy as np

from ..dsl.nodes import (
    Between,
    Cmp,
    Condition,
    DateCmp,
    DateWindow,
    GeneralPred,
    IsToday,
    TextPred,
    YearEquals,
    expr_constants,
)
from ..table import CellType

FEATURE_VERSION = "2"

# Calendar windows are separate categories, matching the text kinds: the
# ranker has to tell InThisMonth from InLastMonth, and the only other
# candidate-level signal is the highlight fraction. Negated literals get
# their own Not* family for the same reason; without it a rule and its
# complement are identical up to fraction.
RULE_CATEGORIES = (
    "TextEquals",
    "TextStartsWith",
    "TextEndsWith",
    "TextContains",
    "NotTextEquals",
    "NotTextStartsWith",
    "NotTextEndsWith",
    "NotTextContains",
    "Cmp",
    "Between",
    "DateCmp",
    "InLastWeek",
    "InThisWeek",
    "InNextWeek",
    "InLastMonth",
    "InThisMonth",
    "InNextMonth",
    "IsToday",
    "YearEquals",
    "Blanks",
    "NotBlanks",
    "Duplicates",
    "Unique",
    "IsError",
    "IsNA",
    "mixed",
)

_WINDOW_PROPS = (
    "InLastWeek",
    "InThisWeek",
    "InNextWeek",
    "InLastMonth",
    "InThisMonth",
    "InNextMonth",
)


def _build_names() -> list[str]:
    names = ["fraction_highlighted"]
    names += [f"rule_type_{t}" for t in ("text", "numeric", "date")]
    names += [f"rule_category_{c}" for c in RULE_CATEGORIES]
    names += ["argument_length"]
    names += [
        "prop_errors_ratio",
        "prop_blanks_ratio",
        "prop_logicals_ratio",
        "prop_na_ratio",
        "prop_duplicates_ratio",
        "prop_uniques_ratio",
        "prop_date_ratio",
        "prop_formatted_ratio",
        "prop_formula_kinds",
    ]
    names += [
        "num_has_stats",
        "num_average",
        "num_median",
        "num_p90",
        "num_p75",
        "num_p25",
        "num_p10",
        "num_has_skew",
        "num_skew",
    ]
    names += [f"date_{w}_ratio" for w in _WINDOW_PROPS]
    names += ["date_today_ratio", "date_has_year", "date_year_offset"]
    names += [
        "text_top_common_ratio",
        "text_categorical",
        "text_free_text",
        "text_has_avg_length",
        "text_avg_length",
    ]
    return names


FEATURE_NAMES: tuple[str, ...] = tuple(_build_names())


def predicate_category(pred) -> str:
    if isinstance(pred, TextPred):
        return pred.kind
    if isinstance(pred, Cmp):
        return "Cmp"
    if isinstance(pred, Between):
        return "Between"
    if isinstance(pred, DateCmp):
        return "DateCmp"
    if isinstance(pred, DateWindow):
        return pred.kind
    if isinstance(pred, IsToday):
        return "IsToday"
    if isinstance(pred, YearEquals):
        return "YearEquals"
    if isinstance(pred, GeneralPred):
        return pred.kind
    raise TypeError(f"unknown predicate {pred!r}")


def literal_category(lit) -> str:
    base = predicate_category(lit.pred)
    return f"Not{base}" if lit.negated else base


def rule_category(cond: Condition) -> str:
    """Predicate family for single-literal conditions, "mixed" otherwise.

    A conjunction or disjunction of equality tests is a different shape of
    rule than one equality test, even when every literal shares a kind, so
    any multi-literal condition lands in the mixed bucket."""
    lits = list(cond.literals())
    return literal_category(lits[0]) if len(lits) == 1 else "mixed"


def argument_length(cond: Condition) -> int:
    """Number of constant arguments across the whole condition."""
    total = 0
    for lit in cond.literals():
        p = lit.pred
        if isinstance(p, TextPred):
            total += 1
        elif isinstance(p, Cmp):
            total += len(expr_constants(p.left)) + len(expr_constants(p.right))
        elif isinstance(p, Between):
            total += 2 + (len(expr_constants(p.expr)) if p.expr is not None else 0)
        elif isinstance(p, (DateCmp, YearEquals)):
            total += 1
    return total


def _squash(v: float) -> float:
    """Signed log compression. Column magnitudes span several orders of
    magnitude across tables; raw values push standardized features far
    outside the training range and the scorer extrapolates wildly."""
    return float(np.sign(v) * np.log10(1.0 + abs(v)))


def featurize(
    cond: Condition,
    fraction: float,
    ctype: CellType,
    props: dict,
    m: int,
) -> np.ndarray:
    """Feature vector under FEATURE_NAMES for a candidate condition."""
    denom = max(m, 1)
    x: list[float] = [fraction]
    x += [1.0 if ctype is t else 0.0 for t in (CellType.TEXT, CellType.NUMERIC, CellType.DATE)]
    cat = rule_category(cond)
    x += [1.0 if cat == c else 0.0 for c in RULE_CATEGORIES]
    x += [float(argument_length(cond))]

    x += [
        props.get("NumErrors", 0) / denom,
        props.get("NumBlanks", 0) / denom,
        props.get("NumLogicals", 0) / denom,
        props.get("NumNA", 0) / denom,
        props.get("NumDuplicates", 0) / denom,
        props.get("NumUniques", 0) / denom,
        props.get("NumDate", 0) / denom,
        props.get("NumFormatted", 0) / denom,
        float(len(props.get("Formulas", []))),
    ]

    has_stats = "AverageValue" in props
    x += [1.0 if has_stats else 0.0]
    for key in (
        "AverageValue",
        "MedianValue",
        "90PercentileValue",
        "75PercentileValue",
        "25PercentileValue",
        "10PercentileValue",
    ):
        x.append(_squash(float(props.get(key, 0.0))))
    has_skew = "Skew" in props
    x += [1.0 if has_skew else 0.0, _squash(float(props.get("Skew", 0.0)))]

    for w in _WINDOW_PROPS:
        x.append(props.get(w, 0) / denom)
    x.append(props.get("Today", 0) / denom)
    has_year = "Year" in props
    x += [1.0 if has_year else 0.0]
    x.append((props.get("Year", 2000) - 2000) / 100.0 if has_year else 0.0)

    common = props.get("MostCommonValues", [])
    x.append((common[0][1] / denom) if common else 0.0)
    x += [
        1.0 if "Categories" in props else 0.0,
        1.0 if props.get("FreeText") else 0.0,
        1.0 if "AverageLength" in props else 0.0,
        float(props.get("AverageLength", 0.0)) / 100.0,
    ]

    arr = np.array(x, dtype=float)
    if arr.shape[0] != len(FEATURE_NAMES):
        raise AssertionError("feature vector does not match FEATURE_NAMES")
    return arr
