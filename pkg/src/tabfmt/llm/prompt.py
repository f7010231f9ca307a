"""Prompt construction for the text-generation client.

The prompt primes the task, shows three static worked examples with
four-step reasoning, then presents the live table (headers, sample rows,
column properties) and asks for the same four labeled steps. Rendering is
deterministic given (table, seed).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from ..profiler import props_to_json
from ..table import Table, TargetColumn

STEP_LABELS = (
    "Step 1 - relevant columns:",
    "Step 2 - predicates and functions:",
    "Step 3 - constants:",
    "Step 4 - rules:",
)

FIRST_ROWS = 5
SAMPLED_ROWS = 5


@dataclass(frozen=True)
class ReasoningSteps:
    relevant_columns: tuple[str, ...] = ()
    predicates_functions: tuple[str, ...] = ()
    constants: tuple[str, ...] = ()
    rules: tuple[str, ...] = ()


def render_response(steps: ReasoningSteps) -> str:
    """Canonical four-step answer text; parse_response inverts this."""
    sections = zip(
        STEP_LABELS,
        (steps.relevant_columns, steps.predicates_functions, steps.constants, steps.rules),
    )
    lines: list[str] = []
    for label, items in sections:
        lines.append(label)
        for item in items:
            lines.append(f"- {item}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Exemplar:
    table_text: str
    target: str
    properties: str
    steps: ReasoningSteps


EXEMPLARS: tuple[Exemplar, ...] = (
    Exemplar(
        table_text=(
            "Project | Owner | Status\n"
            "P-101 | dana | Incomplete\n"
            "P-102 | mike | Complete\n"
            "P-103 | dana | Incomplete\n"
            "P-104 | ruth | On Hold\n"
            "P-105 | mike |\n"
        ),
        target="Status",
        properties=(
            '{"Categories": [["Incomplete", 2], ["Complete", 1], ["On Hold", 1]], '
            '"MostCommonValues": [["Incomplete", 2], ["Complete", 1], ["On Hold", 1]], '
            '"NumBlanks": 1}'
        ),
        steps=ReasoningSteps(
            relevant_columns=("Status",),
            predicates_functions=("TextEquals", "Blanks", "NOT"),
            constants=('"Incomplete"',),
            rules=(
                'TextEquals([@Status], "Incomplete")',
                "NOT(Blanks([@Status]))",
            ),
        ),
    ),
    Exemplar(
        table_text=(
            "Item | Qty | Reorder\n"
            "bolt | 4 | 25\n"
            "nut | 180 | 50\n"
            "washer | 9 | 25\n"
            "screw | 77 | 40\n"
        ),
        target="Qty",
        properties=(
            '{"AverageValue": 67.5, "MedianValue": 43.0, "NumBlanks": 0, '
            '"10PercentileValue": 5.5, "90PercentileValue": 149.1}'
        ),
        steps=ReasoningSteps(
            relevant_columns=("Qty", "Reorder"),
            predicates_functions=("<", "Between"),
            constants=("10",),
            rules=(
                "[@Qty]<10",
                "[@Qty]-[@Reorder]<0",
            ),
        ),
    ),
    Exemplar(
        table_text=(
            "Task | Due\n"
            "audit | 2023-04-03\n"
            "filing | 2023-04-21\n"
            "review | 2022-12-30\n"
            "renewal | 2023-05-02\n"
        ),
        target="Due",
        properties=(
            '{"InThisMonth": 2, "InNextMonth": 1, "NumBlanks": 0, "Year": 2023}'
        ),
        steps=ReasoningSteps(
            relevant_columns=("Due",),
            predicates_functions=("InThisMonth", "YearEquals"),
            constants=("2023",),
            rules=(
                "InThisMonth([@Due])",
                "YearEquals([@Due], 2023)",
            ),
        ),
    ),
)


def _render_rows(table: Table, rows: list[int]) -> str:
    lines = [" | ".join(table.headers)]
    for r in rows:
        lines.append(" | ".join(table.columns[c][r].value for c in range(table.n_cols)))
    return "\n".join(lines)


def build_prompt(table: Table, col: TargetColumn, props: dict, seed: int = 0) -> str:
    """Deterministic few-shot prompt asking for four labeled reasoning steps."""
    rng = random.Random(seed)
    m = table.n_rows
    rows = list(range(min(FIRST_ROWS, m)))
    remaining = list(range(len(rows), m))
    if remaining:
        extra = rng.sample(remaining, min(SAMPLED_ROWS, len(remaining)))
        rows += sorted(extra)

    parts = [
        "You suggest conditional formatting rules for spreadsheet tables. "
        "Given a table, a target column and its computed properties, reason "
        "in four steps: first pick the relevant columns, then the predicates "
        "and functions to use, then the constants, and finally write complete "
        "rule conditions. Conditions use predicates like TextEquals, "
        "TextStartsWith, Blanks, Between, YearEquals, comparisons over "
        "[@Column] references, and NOT/AND/OR.",
        "",
    ]
    for i, ex in enumerate(EXEMPLARS, start=1):
        parts += [
            f"### Example {i}",
            "Table:",
            ex.table_text.rstrip(),
            f"Target column: {ex.target}",
            f"Column properties: {ex.properties}",
            render_response(ex.steps).rstrip(),
            "",
        ]
    types = ", ".join(
        f"{h} ({t.value})" for h, t in zip(table.headers, table.types)
    )
    parts += [
        "### Your task",
        f"Columns: {types}",
        "Table sample:",
        _render_rows(table, rows),
        f"Target column: {table.headers[col.index]}",
        f"Column properties: {props_to_json(props)}",
        "Answer with the same four labeled steps "
        '("relevant columns", "predicates and functions", "constants", '
        '"rules"), one item per line prefixed with "- ".',
    ]
    return "\n".join(parts) + "\n"
