"""End-to-end suggestion pipeline: profile the column, run the symbolic and
(optionally) LLM-backed generators, pool and cluster the candidates, and
attach a learned format to each ranked suggestion.

A failing LLM client never fails the request; the pipeline falls back to
symbolic-only output and flags it.
"""

from __future__ import annotations

import datetime as dt
import logging
from dataclasses import dataclass, field

from .corpus import CorpusStore
from .dsl.evaluate import Evaluator, ExecutionVector
from .dsl.jsonio import cond_to_json
from .dsl.nodes import Condition, print_condition
from .dsl.normalize import normalize
from .formats import RetrievalConfig, SimilarityWeights, suggest_format
from .generator.beam import BeamConfig, beam_synthesize
from .generator.predicates import enumerate_predicates
from .generator.ranker import RankerModel, default_ranker, score_node
from .llm.client import ClientError, GeneratorClient
from .llm.parse import MalformedResponseError, decompose, parse_response
from .llm.prompt import build_prompt
from .profiler import extract_properties
from .ranking import cluster_by_execution, pool_candidates, rank_round_robin
from .table import Format, Table, TargetColumn

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineSuggestion:
    condition: Condition
    score: float
    class_id: int
    vector: ExecutionVector
    format: Format

    @property
    def rule_text(self) -> str:
        return print_condition(normalize(self.condition))

    @property
    def description(self) -> str:
        return (
            f"Highlights {self.vector.popcount} of {self.vector.length} rows "
            f"where {self.rule_text}"
        )

    def to_json(self) -> dict:
        return {
            "rule_text": self.rule_text,
            "rule_ast": cond_to_json(self.condition),
            "score": round(self.score, 6),
            "class_id": self.class_id,
            "highlight_mask": self.vector.to_base64(),
            "mask_length": self.vector.length,
            "highlight_count": self.vector.popcount,
            "format": self.format.to_json(),
            "description": self.description,
        }


@dataclass
class SuggestResult:
    suggestions: list[PipelineSuggestion]
    llm_fallback: bool = False
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "suggestions": [s.to_json() for s in self.suggestions],
            "llm_fallback": self.llm_fallback,
            "warnings": list(self.warnings),
        }


def _best_per_vector(
    candidates: list[tuple[Condition, float]], evaluator: Evaluator
) -> list[tuple[Condition, float]]:
    """Reduce one generator lane to its best-scored condition per execution
    vector. Generators emit many spellings of the same row mask; letting them
    all into the pool would drown each cluster's mean under its own echoes."""
    best: dict[ExecutionVector, tuple[Condition, float]] = {}
    for cond, score in candidates:
        try:
            vec = evaluator.execute(cond)
        except ValueError:
            continue
        prev = best.get(vec)
        if prev is None or score > prev[1]:
            best[vec] = (cond, score)
    return list(best.values())


def suggest(
    table: Table,
    col: TargetColumn,
    k: int = 5,
    client: GeneratorClient | None = None,
    corpus: CorpusStore | None = None,
    ranker: RankerModel | None = None,
    beam: BeamConfig | None = None,
    weights: SimilarityWeights | None = None,
    retrieval: RetrievalConfig | None = None,
    seed: int = 0,
    today: dt.date | None = None,
) -> SuggestResult:
    """Produce up to k format-rule suggestions for one column.

    With client=None the pipeline is fully symbolic and deterministic. A
    client that raises ClientError (or returns an unparseable response)
    downgrades the call to symbolic-only with llm_fallback set.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    ranker = ranker or default_ranker()
    beam = beam or BeamConfig()
    props = extract_properties(table, col, today=today)
    preds = enumerate_predicates(props, table, col)
    evaluator = Evaluator(table, target=col.index, today=today)

    symbolic = _best_per_vector(
        [
            (c.condition, c.boosted_score)
            for c in beam_synthesize(
                preds, [], table, col, beam, ranker, today=today, props=props
            )
        ],
        evaluator,
    )

    neural: list[tuple[Condition, float]] = []
    neurosymbolic: list[tuple[Condition, float]] = []
    llm_fallback = False
    warnings: list[str] = []

    if client is not None:
        try:
            prompt = build_prompt(table, col, props, seed=seed)
            parsed = parse_response(client.complete(prompt))
        except (ClientError, MalformedResponseError) as exc:
            log.warning("llm generator unavailable, symbolic only: %s", exc)
            llm_fallback = True
            warnings.append(f"llm unavailable: {exc}")
            parsed = None
        if parsed is not None:
            warnings.extend(parsed.warnings)
            for cond in parsed.conditions:
                try:
                    neural.append(
                        (cond, score_node(cond, table, col, ranker, today, props))
                    )
                except ValueError as exc:
                    warnings.append(f"generated rule dropped: {exc}")
            boosted, components = decompose(parsed.conditions, parsed.steps)
            neurosymbolic = _best_per_vector(
                [
                    (c.condition, c.boosted_score)
                    for c in beam_synthesize(
                        preds,
                        components,
                        table,
                        col,
                        beam,
                        ranker,
                        boosted_terms=boosted,
                        today=today,
                        props=props,
                    )
                ],
                evaluator,
            )

    pool = pool_candidates(symbolic, neural, neurosymbolic)
    classes = cluster_by_execution(pool, table, target=col.index, today=today)
    ranked = rank_round_robin(classes, k)

    suggestions = []
    for item in ranked:
        fmt = suggest_format(
            table, item.condition, corpus or [], weights, retrieval
        )
        suggestions.append(
            PipelineSuggestion(
                condition=item.condition,
                score=item.score,
                class_id=item.class_id,
                vector=item.vector,
                format=fmt,
            )
        )
    return SuggestResult(suggestions, llm_fallback, warnings)
