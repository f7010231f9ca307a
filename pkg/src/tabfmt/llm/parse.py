"""Parsing of four-step responses and decomposition into symbolic inputs."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, replace as dc_replace

from ..dsl.nodes import Condition, Literal, print_literal
from ..dsl.normalize import condition_columns, condition_constants
from ..dsl.parser import ConditionParseError, parse_condition
from ..generator.beam import Component
from ..table import parse_number
from .prompt import ReasoningSteps


class MalformedResponseError(ValueError):
    """No recognizable reasoning sections in the response."""


@dataclass(frozen=True)
class ParsedResponse:
    steps: ReasoningSteps
    conditions: tuple[Condition, ...]
    warnings: tuple[str, ...]


_SECTION_PATTERNS = (
    ("relevant_columns", re.compile(r"relevant\s+columns", re.IGNORECASE)),
    ("predicates_functions", re.compile(r"predicates|functions", re.IGNORECASE)),
    ("constants", re.compile(r"constants", re.IGNORECASE)),
    ("rules", re.compile(r"rules", re.IGNORECASE)),
)
_ITEM_PREFIX = re.compile(r"^\s*(?:[-*]|\d+[.)])\s*")


def parse_response(text: str) -> ParsedResponse:
    """Extract the four labeled sections and parse each rule line.

    Unparseable rule lines become warnings, never failures; a response with
    no sections at all is malformed.
    """
    sections: dict[str, list[str]] = {name: [] for name, _ in _SECTION_PATTERNS}
    seen: set[str] = set()
    current: str | None = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        header = _match_section(line)
        if header is not None:
            name, rest = header
            seen.add(name)
            current = name
            if rest:
                sections[name].append(rest)
            continue
        if current is not None:
            item = _ITEM_PREFIX.sub("", line).strip()
            if item:
                sections[current].append(item)
    if not seen:
        raise MalformedResponseError("response contains no reasoning sections")

    steps = ReasoningSteps(
        relevant_columns=tuple(sections["relevant_columns"]),
        predicates_functions=tuple(sections["predicates_functions"]),
        constants=tuple(sections["constants"]),
        rules=tuple(sections["rules"]),
    )
    conditions: list[Condition] = []
    warnings: list[str] = []
    for rule in steps.rules:
        try:
            conditions.append(parse_condition(rule))
        except ConditionParseError as exc:
            warnings.append(f"unparseable rule {rule!r}: {exc}")
    return ParsedResponse(steps, tuple(conditions), tuple(warnings))


def _match_section(line: str) -> tuple[str, str] | None:
    """A section header names one of the four labels before a colon (or in a
    "Step N ..." line); text after the colon counts as the first item."""
    head, sep, rest = line.partition(":")
    if not sep and not line.lower().lstrip("-* ").startswith("step"):
        return None
    if not sep:
        head, rest = line, ""
    for name, pattern in _SECTION_PATTERNS:
        if pattern.search(head) and len(head) <= 60:
            return name, rest.strip()
    return None


def _normalize_term(raw: str) -> str | None:
    s = raw.strip().strip('"').strip()
    s = re.sub(r"^\[@(.*)\]$", r"\1", s)
    if not s:
        return None
    num = parse_number(s)
    if num is not None:
        from ..dsl.nodes import print_number

        return print_number(num)
    return s.casefold()


def _open_col(lit: Literal) -> Literal | None:
    pred = lit.pred
    if getattr(pred, "col", None) is None:
        return None
    return Literal(dc_replace(pred, col=None), lit.negated)


def decompose(
    conditions: list[Condition], steps: ReasoningSteps
) -> tuple[set[str], list[Component]]:
    """Break generated rules into boosted terms (column names and constants)
    and reusable components for the symbolic search."""
    boosted: set[str] = set()
    for cond in conditions:
        boosted |= {c.casefold() for c in condition_constants(cond)}
        boosted |= set(condition_columns(cond))
    for raw in itertools.chain(steps.constants, steps.relevant_columns):
        term = _normalize_term(raw)
        if term is not None:
            boosted.add(term)

    components: dict[tuple, Component] = {}

    def add(literals: tuple[Literal, ...]) -> None:
        comp = Component(literals, origin="neural")
        key = tuple(print_literal(l) for l in literals)
        components.setdefault(key, comp)

    for cond in conditions:
        for clause in cond.clauses:
            for lit in clause:
                add((lit,))
                opened = _open_col(lit)
                if opened is not None:
                    add((opened,))
            for a, b in itertools.combinations(clause, 2):
                add((a, b))
    for entry in steps.predicates_functions:
        try:
            cond = parse_condition(entry)
        except ConditionParseError:
            continue
        lits = cond.literals()
        if len(cond.clauses) == 1 and len(lits) <= 2:
            add(tuple(lits))

    ordered = sorted(components.items(), key=lambda kv: kv[0])
    return boosted, [comp for _, comp in ordered]
