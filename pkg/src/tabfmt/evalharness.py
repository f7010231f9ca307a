"""Benchmark evaluation: match metrics, diversity analytics, suite runner.

Three layers. Pairwise metrics (`match_conditions`, `match_formats`) say
whether one learned rule recovers one ground truth. `diversity` describes a
suggestion list as a whole. `run_suite` drives the pipeline over a benchmark
and aggregates everything into a versioned JSON/CSV report.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import datetime as dt

import numpy as np

from .colors import nearest_web_color
from .corpus import BenchmarkTask
from .dsl import (
    Condition,
    Evaluator,
    complexity,
    normalize,
    sketch,
    tokenize_condition,
)
from .pipeline import PipelineSuggestion, suggest
from .table import Format, Table

log = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = "1"

# Format identifiers that carry a color value; the rest are style toggles.
COLOR_IDENTIFIERS = ("fill", "font")

METRICS = ("exact", "sketch", "execution", "color", "property", "end_to_end")

# Metrics that need a ground-truth rule. Manually formatted tasks only carry
# a highlight mask, so on those everything but execution stays unscored.
RULE_ONLY_METRICS = ("exact", "sketch", "color", "property", "end_to_end")


@dataclass(frozen=True)
class MatchResult:
    """One learned suggestion judged against one ground truth.

    `end_to_end` may be omitted; it is derived as execution AND color, the
    bar for "the user could have accepted this suggestion as-is".
    """

    exact: bool
    sketch: bool
    execution: bool
    color: bool
    property: bool
    end_to_end: bool = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.end_to_end is None:
            object.__setattr__(self, "end_to_end", self.execution and self.color)
        # exact compares normalized forms, sketch compares their constant-free
        # shells, so an exact match that is not a sketch match is a bug.
        if self.exact and not self.sketch:
            raise ValueError("exact match implies sketch match")
        if self.end_to_end != (self.execution and self.color):
            raise ValueError("end_to_end must equal execution AND color")

    def to_json(self) -> dict:
        return {name: getattr(self, name) for name in METRICS}


def match_conditions(
    learned: Condition,
    truth: Condition,
    table: Table,
    today: dt.date | None = None,
) -> tuple[bool, bool, bool]:
    """(exact, sketch, execution) agreement between two conditions.

    Exact compares normalized forms, so clause order and literal order do not
    matter. Sketch compares structure with every constant blanked out.
    Execution compares the row masks the two conditions select on `table`;
    if either side fails to execute there, execution is False with a warning.
    """
    exact = normalize(learned) == normalize(truth)
    sketch_eq = sketch(learned) == sketch(truth)
    ev = Evaluator(table, today=today)
    try:
        execution = ev.execute(learned) == ev.execute(truth)
    except ValueError as exc:
        log.warning("execution match failed, scoring as miss: %s", exc)
        execution = False
    return exact, sketch_eq, execution


def match_formats(learned: Format, truth: Format) -> tuple[bool, bool]:
    """(color, property) agreement between two formats.

    Color: every color the truth sets must be set by the learned format and
    name the same extended CSS color; exact RGB values do not matter, and a
    truth with no colors matches vacuously. Property: both formats modify the
    same set of identifiers, values ignored. Bold and italic are distinct
    identifiers, so a bold rule does not property-match an italic one.
    """
    color = True
    for name in COLOR_IDENTIFIERS:
        want = getattr(truth, name)
        if want is None:
            continue
        got = getattr(learned, name)
        if got is None or nearest_web_color(got) != nearest_web_color(want):
            color = False
            break
    prop = learned.identifiers() == truth.identifiers()
    return color, prop


def match_rule(
    suggestion: PipelineSuggestion,
    truth_condition: Condition,
    truth_format: Format,
    table: Table,
    today: dt.date | None = None,
) -> MatchResult:
    """Full six-way MatchResult for one suggestion against a rule task."""
    exact, sketch_eq, execution = match_conditions(
        suggestion.condition, truth_condition, table, today=today
    )
    color, prop = match_formats(suggestion.format, truth_format)
    return MatchResult(exact, sketch_eq, execution, color, prop)


# --- diversity ---------------------------------------------------------------

def token_edit_distance(a: Sequence[str], b: Sequence[str]) -> int:
    """Levenshtein distance over token sequences (insert/delete/substitute)."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ta in enumerate(a, start=1):
        cur = [i]
        for j, tb in enumerate(b, start=1):
            cur.append(min(
                prev[j] + 1,
                cur[j - 1] + 1,
                prev[j - 1] + (ta != tb),
            ))
        prev = cur
    return prev[-1]


def bag_of_tokens_embedder(texts: Sequence[str]) -> np.ndarray:
    """Count-vector embeddings over the token vocabulary of `texts`.

    A deliberately plain stand-in for a learned code encoder: two rules are
    similar to the extent they reuse the same operators, columns and
    constants, regardless of order.
    """
    token_lists = [tokenize_condition(t) for t in texts]
    vocab = {tok: i for i, tok in enumerate(sorted({t for lst in token_lists for t in lst}))}
    out = np.zeros((len(texts), max(len(vocab), 1)), dtype=np.float64)
    for row, lst in enumerate(token_lists):
        for tok in lst:
            out[row, vocab[tok]] += 1.0
    return out


bag_of_tokens_embedder.name = "bag-of-tokens-cosine"


@dataclass(frozen=True)
class DiversityReport:
    """Mean pairwise spread of a suggestion list, over all unordered pairs."""

    edit_distance: float
    hamming: float
    embedding_similarity: float
    embedder: str
    n_pairs: int

    def to_json(self) -> dict:
        return {
            "edit_distance": round(self.edit_distance, 6),
            "hamming": round(self.hamming, 6),
            "embedding_similarity": round(self.embedding_similarity, 6),
            "embedder": self.embedder,
            "n_pairs": self.n_pairs,
        }


def _cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def diversity(
    suggestions: Sequence[PipelineSuggestion],
    table: Table | None = None,
    embedder: Callable[[Sequence[str]], np.ndarray] | None = None,
) -> DiversityReport | None:
    """How spread out a suggestion list is, or None for lists shorter than 2.

    Token edit distance is Levenshtein over the token streams of the
    normalized printed conditions. Execution distance is Hamming between
    highlight masks, normalized by row count. Embedding similarity comes
    from the injected embedder (rows of vectors for a list of rule texts);
    the default is cosine over bag-of-token counts, and the report records
    which embedder produced the number.
    """
    if len(suggestions) < 2:
        return None
    embedder = embedder or bag_of_tokens_embedder
    texts = [s.rule_text for s in suggestions]
    token_lists = [tokenize_condition(t) for t in texts]
    masks = [s.vector.to_numpy() for s in suggestions]
    m = table.n_rows if table is not None else len(masks[0])
    embeddings = np.asarray(embedder(texts), dtype=np.float64)

    edit_total = 0.0
    ham_total = 0.0
    sim_total = 0.0
    n_pairs = 0
    for i in range(len(suggestions)):
        for j in range(i + 1, len(suggestions)):
            edit_total += token_edit_distance(token_lists[i], token_lists[j])
            ham_total += float(np.count_nonzero(masks[i] ^ masks[j])) / max(m, 1)
            sim_total += _cosine(embeddings[i], embeddings[j])
            n_pairs += 1
    return DiversityReport(
        edit_distance=edit_total / n_pairs,
        hamming=ham_total / n_pairs,
        embedding_similarity=sim_total / n_pairs,
        embedder=getattr(embedder, "name", getattr(embedder, "__name__", "custom")),
        n_pairs=n_pairs,
    )


# --- suite runner -------------------------------------------------------------

@dataclass
class TaskOutcome:
    """Everything the suite learned about one benchmark task."""

    task_id: str
    kind: str
    n_suggestions: int = 0
    # k -> metric name -> whether any of the first k suggestions matched
    matches: dict[int, dict[str, bool]] = field(default_factory=dict)
    coverage: dict[int, float] = field(default_factory=dict)
    # (token_count, ast_depth) per emitted suggestion, in rank order
    complexities: list[tuple[int, int]] = field(default_factory=list)
    diversity: DiversityReport | None = None
    error: str | None = None

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "kind": self.kind,
            "n_suggestions": self.n_suggestions,
            "matches": {str(k): dict(v) for k, v in sorted(self.matches.items())},
            "coverage": {str(k): round(v, 6) for k, v in sorted(self.coverage.items())},
            "complexities": [list(c) for c in self.complexities],
            "diversity": self.diversity.to_json() if self.diversity else None,
            "error": self.error,
        }


@dataclass
class SuiteReport:
    """Aggregate benchmark report; serializes to report.json / report.csv."""

    k_values: tuple[int, ...]
    n_tasks: int
    n_rule_tasks: int
    n_manual_tasks: int
    n_failures: int
    # k -> metric -> fraction of scoreable tasks matched within the first k
    match_rates: dict[int, dict[str, float]]
    completeness: dict[int, float]
    coverage: dict[int, float]
    complexity: dict
    diversity: dict | None
    outcomes: list[TaskOutcome]
    schema_version: str = REPORT_SCHEMA_VERSION

    def to_json(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "k_values": list(self.k_values),
            "n_tasks": self.n_tasks,
            "n_rule_tasks": self.n_rule_tasks,
            "n_manual_tasks": self.n_manual_tasks,
            "n_failures": self.n_failures,
            "match_rates": {
                str(k): {m: round(r, 6) for m, r in v.items()}
                for k, v in sorted(self.match_rates.items())
            },
            "completeness": {str(k): round(v, 6) for k, v in sorted(self.completeness.items())},
            "coverage": {str(k): round(v, 6) for k, v in sorted(self.coverage.items())},
            "complexity": self.complexity,
            "diversity": self.diversity,
            "tasks": [o.to_json() for o in self.outcomes],
        }


def _score_task(
    task: BenchmarkTask,
    k_values: tuple[int, ...],
    embedder,
    suggest_kwargs: dict,
) -> TaskOutcome:
    outcome = TaskOutcome(task_id=task.task_id, kind=task.kind)
    max_k = max(k_values)
    try:
        # One extra suggestion beyond the largest k: emission is a truncated
        # k-independent stream, so the first max_k entries are unchanged and
        # the extra one tells us whether completeness holds at k = max_k.
        result = suggest(
            task.table, task.target, k=max_k + 1, today=task.today, **suggest_kwargs
        )
    except Exception as exc:  # engine failure must not sink the suite
        log.warning("task %s failed: %s", task.task_id, exc)
        outcome.error = f"{type(exc).__name__}: {exc}"
        return outcome

    subs = result.suggestions[: max_k + 1]
    outcome.n_suggestions = len(subs)

    per_suggestion: list[MatchResult] = []
    if task.kind == "rule":
        truth_norm = normalize(task.rule.condition)
        truth_sketch = sketch(task.rule.condition)
        for s in subs:
            exact = normalize(s.condition) == truth_norm
            sketch_eq = sketch(s.condition) == truth_sketch
            # Pipeline vectors and the planted mask were both executed on this
            # table under the task's today, so vector equality IS execution match.
            execution = s.vector == task.mask
            color, prop = match_formats(s.format, task.rule.format)
            per_suggestion.append(MatchResult(exact, sketch_eq, execution, color, prop))
    else:
        for s in subs:
            per_suggestion.append(
                MatchResult(False, False, s.vector == task.mask, False, False)
            )

    for k in k_values:
        head = per_suggestion[:k]
        outcome.matches[k] = {
            m: any(getattr(r, m) for r in head) for m in METRICS
        }
        covered = np.zeros(task.table.n_rows, dtype=bool)
        for s in subs[:k]:
            covered |= s.vector.to_numpy()
        outcome.coverage[k] = float(covered.sum()) / max(task.table.n_rows, 1)

    # Analytics describe the list a k = max_k user would see, not the probe row.
    shown = subs[:max_k]
    outcome.complexities = [complexity(s.condition) for s in shown]
    outcome.diversity = diversity(shown, task.table, embedder)
    return outcome


def run_suite(
    tasks: Sequence[BenchmarkTask],
    k_values: tuple[int, ...] = (1, 3, 5),
    *,
    client=None,
    corpus=None,
    ranker=None,
    beam=None,
    weights=None,
    retrieval=None,
    seed: int = 0,
    embedder: Callable[[Sequence[str]], np.ndarray] | None = None,
    workers: int = 1,
) -> SuiteReport:
    """Run the suggestion pipeline over a benchmark and aggregate the metrics.

    A task counts as matched at k when any of its first k suggestions
    matches, per metric. Manual tasks are scored on execution only; the
    other metrics keep rule tasks as their denominator. Completeness at k is
    the fraction of tasks that produced more than k suggestions (the engine
    is asked for max(k_values) + 1, so this is measurable at every reported
    k); coverage at k is the mean fraction of column rows highlighted by at
    least one of the first k rules. Engine failures are recorded per task
    and the suite continues. With a fixed seed and no LLM client, output is
    deterministic; aggregation is order-independent, so `workers` only
    changes wall time.
    """
    if not k_values:
        raise ValueError("k_values must be non-empty")
    k_values = tuple(sorted(set(k_values)))
    embedder = embedder or bag_of_tokens_embedder
    suggest_kwargs = dict(
        client=client, corpus=corpus, ranker=ranker,
        beam=beam, weights=weights, retrieval=retrieval, seed=seed,
    )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(
                lambda t: _score_task(t, k_values, embedder, suggest_kwargs), tasks
            ))
    else:
        outcomes = [_score_task(t, k_values, embedder, suggest_kwargs) for t in tasks]

    scored = [o for o in outcomes if o.error is None]
    rule_scored = [o for o in scored if o.kind == "rule"]
    manual_scored = [o for o in scored if o.kind == "manual"]

    match_rates: dict[int, dict[str, float]] = {}
    completeness: dict[int, float] = {}
    coverage: dict[int, float] = {}
    for k in k_values:
        rates = {}
        for metric in METRICS:
            pool_ = scored if metric == "execution" else rule_scored
            rates[metric] = (
                sum(o.matches[k][metric] for o in pool_) / len(pool_) if pool_ else 0.0
            )
        match_rates[k] = rates
        completeness[k] = (
            sum(o.n_suggestions > k for o in scored) / len(scored) if scored else 0.0
        )
        coverage[k] = (
            sum(o.coverage[k] for o in scored) / len(scored) if scored else 0.0
        )

    token_counts = [c[0] for o in scored for c in o.complexities]
    depths = [c[1] for o in scored for c in o.complexities]
    histogram: dict[str, int] = {}
    for t in sorted(token_counts):
        histogram[str(t)] = histogram.get(str(t), 0) + 1
    complexity_stats = {
        "n_suggestions": len(token_counts),
        "mean_tokens": round(sum(token_counts) / len(token_counts), 6) if token_counts else 0.0,
        "mean_depth": round(sum(depths) / len(depths), 6) if depths else 0.0,
        "token_histogram": histogram,
    }

    div_reports = [o.diversity for o in scored if o.diversity is not None]
    diversity_agg = None
    if div_reports:
        diversity_agg = {
            "edit_distance": round(sum(r.edit_distance for r in div_reports) / len(div_reports), 6),
            "hamming": round(sum(r.hamming for r in div_reports) / len(div_reports), 6),
            "embedding_similarity": round(
                sum(r.embedding_similarity for r in div_reports) / len(div_reports), 6
            ),
            "embedder": div_reports[0].embedder,
            "n_tasks": len(div_reports),
        }

    return SuiteReport(
        k_values=k_values,
        n_tasks=len(tasks),
        n_rule_tasks=len(rule_scored),
        n_manual_tasks=len(manual_scored),
        n_failures=len(outcomes) - len(scored),
        match_rates=match_rates,
        completeness=completeness,
        coverage=coverage,
        complexity=complexity_stats,
        diversity=diversity_agg,
        outcomes=outcomes,
    )


def write_report(report: SuiteReport, out_dir) -> tuple[Path, Path]:
    """Write report.json plus a flat per-task report.csv; returns both paths.

    Unscored cells (failed tasks; rule-only metrics on manual tasks) are left
    empty in the CSV rather than written as zeros, so spreadsheet averages
    over a column match the JSON aggregates.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / "report.json"
    json_path.write_text(json.dumps(report.to_json(), indent=2) + "\n")

    csv_path = out / "report.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["task_id", "kind", "n_suggestions", "error"]
        for k in report.k_values:
            header += [f"{m}@{k}" for m in METRICS]
        header += [f"coverage@{k}" for k in report.k_values]
        writer.writerow(header)
        for o in report.outcomes:
            row: list = [o.task_id, o.kind, o.n_suggestions, o.error or ""]
            for k in report.k_values:
                flags = o.matches.get(k, {})
                for m in METRICS:
                    if o.error is not None or (o.kind == "manual" and m in RULE_ONLY_METRICS):
                        row.append("")
                    else:
                        row.append(int(flags.get(m, False)))
            for k in report.k_values:
                row.append("" if o.error is not None else round(o.coverage.get(k, 0.0), 6))
            writer.writerow(row)
    return json_path, csv_path
