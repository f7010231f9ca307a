"""Structured JSON form of condition ASTs, used in suggestion payloads and
corpus records alongside the surface text."""

from __future__ import annotations

import datetime as dt

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
    WINDOW_NAMES,
    YearEquals,
    GENERAL_KINDS,
    TEXT_KINDS,
)


def expr_to_json(e: NumExpr) -> dict:
    if isinstance(e, ColumnRef):
        return {"ref": e.header}
    if isinstance(e, Const):
        return {"const": e.value}
    key = "add" if isinstance(e, Add) else "sub"
    return {key: [expr_to_json(e.left), expr_to_json(e.right)]}


def expr_from_json(doc: dict) -> NumExpr:
    if "ref" in doc:
        return ColumnRef(doc["ref"])
    if "const" in doc:
        return Const(float(doc["const"]))
    if "add" in doc:
        return Add(expr_from_json(doc["add"][0]), expr_from_json(doc["add"][1]))
    if "sub" in doc:
        return Sub(expr_from_json(doc["sub"][0]), expr_from_json(doc["sub"][1]))
    raise ValueError(f"bad expression document: {doc!r}")


def pred_to_json(p: Predicate) -> dict:
    if isinstance(p, TextPred):
        return {"kind": p.kind, "col": p.col, "text": p.text}
    if isinstance(p, Cmp):
        return {
            "kind": "Cmp",
            "op": p.op,
            "left": expr_to_json(p.left),
            "right": expr_to_json(p.right),
        }
    if isinstance(p, Between):
        return {
            "kind": "Between",
            "lo": p.lo,
            "hi": p.hi,
            "expr": expr_to_json(p.expr) if p.expr is not None else None,
        }
    if isinstance(p, DateCmp):
        return {"kind": p.kind, "col": p.col, "date": p.date.isoformat()}
    if isinstance(p, DateWindow):
        return {"kind": p.kind, "col": p.col}
    if isinstance(p, IsToday):
        return {"kind": "IsToday", "col": p.col}
    if isinstance(p, YearEquals):
        return {"kind": "YearEquals", "col": p.col, "year": p.year}
    if isinstance(p, GeneralPred):
        return {"kind": p.kind, "col": p.col}
    raise TypeError(f"unknown predicate {p!r}")


def pred_from_json(doc: dict) -> Predicate:
    kind = doc["kind"]
    col = doc.get("col")
    if kind in TEXT_KINDS:
        return TextPred(kind, doc["text"], col)
    if kind == "Cmp":
        return Cmp(expr_from_json(doc["left"]), doc["op"], expr_from_json(doc["right"]))
    if kind == "Between":
        expr = expr_from_json(doc["expr"]) if doc.get("expr") is not None else None
        return Between(float(doc["lo"]), float(doc["hi"]), expr)
    if kind in ("DateBefore", "DateAfter"):
        return DateCmp(kind, dt.date.fromisoformat(doc["date"]), col)
    if kind in WINDOW_NAMES:
        return DateWindow(kind, col)
    if kind == "IsToday":
        return IsToday(col)
    if kind == "YearEquals":
        return YearEquals(int(doc["year"]), col)
    if kind in GENERAL_KINDS:
        return GeneralPred(kind, col)
    raise ValueError(f"unknown predicate kind {kind!r}")


def cond_to_json(cond: Condition) -> dict:
    return {
        "clauses": [
            [{"neg": l.negated, "pred": pred_to_json(l.pred)} for l in clause]
            for clause in cond.clauses
        ]
    }


def cond_from_json(doc: dict) -> Condition:
    return Condition(
        tuple(
            tuple(Literal(pred_from_json(l["pred"]), bool(l["neg"])) for l in clause)
            for clause in doc["clauses"]
        )
    )
