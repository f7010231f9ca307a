"""Condition language: AST, parser, printer, evaluator and canonical forms."""

from .evaluate import (
    Evaluator,
    ExecutionVector,
    TypeMismatchError,
    UnknownColumnError,
    evaluate,
    execute,
)
from .jsonio import cond_from_json, cond_to_json
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
    Rule,
    Sub,
    TextPred,
    YearEquals,
    print_condition,
    print_literal,
    print_predicate,
    single,
)
from .normalize import (
    complexity,
    condition_columns,
    condition_constants,
    literal_sketches,
    normalize,
    sketch,
)
from .parser import (
    ConditionParseError,
    DnfBoundError,
    parse_condition,
    tokenize_condition,
)

__all__ = [
    "Add",
    "Between",
    "Cmp",
    "ColumnRef",
    "Condition",
    "ConditionParseError",
    "Const",
    "DateCmp",
    "DateWindow",
    "DnfBoundError",
    "Evaluator",
    "ExecutionVector",
    "GeneralPred",
    "IsToday",
    "Literal",
    "NumExpr",
    "Predicate",
    "Rule",
    "Sub",
    "TextPred",
    "TypeMismatchError",
    "UnknownColumnError",
    "YearEquals",
    "complexity",
    "cond_from_json",
    "cond_to_json",
    "condition_columns",
    "condition_constants",
    "evaluate",
    "execute",
    "literal_sketches",
    "normalize",
    "parse_condition",
    "print_condition",
    "print_literal",
    "print_predicate",
    "single",
    "sketch",
    "tokenize_condition",
]
