"""Canonical forms for conditions.

normalize() fixes an order for clauses, literals and commutative operands so
that equivalent spellings print identically; it never changes what a
condition executes to. sketch() additionally erases constants, keeping only
operators and structure. complexity() counts tokens (predicates and
arguments) and syntax-tree depth of the normalized form.
"""

from __future__ import annotations

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
    expr_columns,
    expr_constants,
    print_condition,
    print_expr,
    print_literal,
    print_number,
)

_FLIP_SWAP = {"<": ">", "<=": ">="}


def _normalize_expr(e: NumExpr) -> NumExpr:
    if isinstance(e, (ColumnRef, Const)):
        return e
    left = _normalize_expr(e.left)
    right = _normalize_expr(e.right)
    if isinstance(e, Add):
        # Addition commutes; order operands by printed form. Never
        # reassociate: float addition is commutative but not associative.
        if print_expr(left) > print_expr(right):
            left, right = right, left
        return Add(left, right)
    return Sub(left, right)


def _has_ref(e: NumExpr) -> bool:
    return bool(expr_columns(e))


def _normalize_pred(p: Predicate) -> Predicate:
    if not isinstance(p, Cmp):
        if isinstance(p, Between) and p.expr is not None:
            return Between(p.lo, p.hi, _normalize_expr(p.expr))
        return p
    left = _normalize_expr(p.left)
    right = _normalize_expr(p.right)
    op = p.op
    if op in _FLIP_SWAP:
        left, right, op = right, left, _FLIP_SWAP[op]
    elif op in ("=", "!="):
        # Commutative: put the column-bearing side left, ties by print.
        lref, rref = _has_ref(left), _has_ref(right)
        if (rref and not lref) or (
            lref == rref and print_expr(left) > print_expr(right)
        ):
            left, right = right, left
    return Cmp(left, op, right)


def normalize(cond: Condition) -> Condition:
    clauses = []
    for clause in cond.clauses:
        lits = [Literal(_normalize_pred(l.pred), l.negated) for l in clause]
        seen: dict[str, Literal] = {}
        for lit in lits:
            seen.setdefault(print_literal(lit), lit)
        clauses.append(tuple(seen[k] for k in sorted(seen)))
    uniq: dict[str, tuple[Literal, ...]] = {}
    for clause in clauses:
        uniq.setdefault(" AND ".join(print_literal(l) for l in clause), clause)
    return Condition(tuple(uniq[k] for k in sorted(uniq)))


# --- sketches ---------------------------------------------------------------

HOLE = "<?>"


def _sketch_expr(e: NumExpr) -> str:
    if isinstance(e, ColumnRef):
        return print_expr(e)
    if isinstance(e, Const):
        return HOLE
    op = "+" if isinstance(e, Add) else "-"
    right = _sketch_expr(e.right)
    if isinstance(e.right, (Add, Sub)):
        right = f"({right})"
    return f"{_sketch_expr(e.left)}{op}{right}"


def _sketch_pred(p: Predicate) -> str:
    if isinstance(p, TextPred):
        args = ([f"[@{p.col}]"] if p.col is not None else []) + [HOLE]
        return f"{p.kind}({', '.join(args)})"
    if isinstance(p, Cmp):
        return f"{_sketch_expr(p.left)}{p.op}{_sketch_expr(p.right)}"
    if isinstance(p, Between):
        args = ([_sketch_expr(p.expr)] if p.expr is not None else []) + [HOLE, HOLE]
        return f"Between({', '.join(args)})"
    if isinstance(p, DateCmp):
        args = ([f"[@{p.col}]"] if p.col is not None else []) + [HOLE]
        return f"{p.kind}({', '.join(args)})"
    if isinstance(p, YearEquals):
        args = ([f"[@{p.col}]"] if p.col is not None else []) + [HOLE]
        return f"YearEquals({', '.join(args)})"
    # Window, IsToday and general predicates carry no constants.
    from .nodes import print_predicate

    return print_predicate(p)


def _sketch_literal(lit: Literal) -> str:
    body = _sketch_pred(lit.pred)
    return f"NOT({body})" if lit.negated else body


def sketch(cond: Condition) -> str:
    """Normalized condition text with every constant replaced by <?>."""
    norm = normalize(cond)
    multi = len(norm.clauses) > 1
    parts = []
    for clause in norm.clauses:
        text = " AND ".join(_sketch_literal(l) for l in clause)
        if multi and len(clause) > 1:
            text = f"({text})"
        parts.append(text)
    return " OR ".join(parts)


def literal_sketches(cond: Condition) -> frozenset[str]:
    """Per-literal sketches; the retrieval features of a condition."""
    return frozenset(_sketch_literal(l) for l in normalize(cond).literals())


def condition_constants(cond: Condition) -> frozenset[str]:
    """Canonical string forms of every constant argument in the condition."""
    out: set[str] = set()
    for lit in cond.literals():
        p = lit.pred
        if isinstance(p, TextPred):
            out.add(p.text.strip().casefold())
        elif isinstance(p, Cmp):
            out.update(print_number(v) for v in expr_constants(p.left) + expr_constants(p.right))
        elif isinstance(p, Between):
            out.add(print_number(p.lo))
            out.add(print_number(p.hi))
            if p.expr is not None:
                out.update(print_number(v) for v in expr_constants(p.expr))
        elif isinstance(p, DateCmp):
            out.add(p.date.isoformat())
        elif isinstance(p, YearEquals):
            out.add(str(p.year))
    return frozenset(out)


def condition_columns(cond: Condition) -> frozenset[str]:
    """Case-folded headers of every explicitly referenced column."""
    out: set[str] = set()
    for lit in cond.literals():
        p = lit.pred
        if isinstance(p, Cmp):
            cols = expr_columns(p.left) | expr_columns(p.right)
        elif isinstance(p, Between) and p.expr is not None:
            cols = expr_columns(p.expr)
        else:
            col = getattr(p, "col", None)
            cols = {col} if col is not None else set()
        out.update(c.casefold() for c in cols)
    return frozenset(out)


# --- complexity --------------------------------------------------------------

def _expr_tokens(e: NumExpr) -> int:
    if isinstance(e, (ColumnRef, Const)):
        return 1
    return 1 + _expr_tokens(e.left) + _expr_tokens(e.right)


def _expr_height(e: NumExpr) -> int:
    if isinstance(e, (ColumnRef, Const)):
        return 1
    return 1 + max(_expr_height(e.left), _expr_height(e.right))


def _pred_tokens(p: Predicate) -> int:
    # One token for the predicate itself plus one per argument; expression
    # operators inside comparisons count as tokens too.
    if isinstance(p, TextPred):
        return 2 + (1 if p.col is not None else 0)
    if isinstance(p, Cmp):
        return 1 + _expr_tokens(p.left) + _expr_tokens(p.right)
    if isinstance(p, Between):
        return 3 + (_expr_tokens(p.expr) if p.expr is not None else 0)
    if isinstance(p, (DateCmp, YearEquals)):
        return 2 + (1 if p.col is not None else 0)
    return 1 + (1 if getattr(p, "col", None) is not None else 0)


def _pred_height(p: Predicate) -> int:
    if isinstance(p, TextPred):
        return 2
    if isinstance(p, Cmp):
        return 1 + max(_expr_height(p.left), _expr_height(p.right))
    if isinstance(p, Between):
        return 1 + max(1, _expr_height(p.expr) if p.expr is not None else 1)
    if isinstance(p, (DateCmp, YearEquals)):
        return 2
    if getattr(p, "col", None) is not None:
        return 2
    return 1


def complexity(cond: Condition) -> tuple[int, int]:
    """(token_count, ast_depth) of the normalized condition."""
    norm = normalize(cond)
    tokens = 0
    clause_heights = []
    for clause in norm.clauses:
        lit_heights = []
        for lit in clause:
            tokens += _pred_tokens(lit.pred)
            h = _pred_height(lit.pred)
            lit_heights.append(h + 1 if lit.negated else h)
        h = max(lit_heights)
        clause_heights.append(h + 1 if len(clause) > 1 else h)
    depth = max(clause_heights)
    if len(norm.clauses) > 1:
        depth += 1
    return tokens, depth
