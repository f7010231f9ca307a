"""Candidate pooling, execution-equivalence clustering and round-robin
ranking.

Two conditions are equivalent on a table when they highlight exactly the
same rows. Clusters of equivalent candidates are scored by the mean of
their member scores, and the final list interleaves cluster members so the
first k suggestions are pairwise execution-distinct whenever k clusters
exist.
"""

from __future__ import annotations

import datetime as dt
import logging
from dataclasses import dataclass

from .dsl.evaluate import Evaluator, ExecutionVector
from .dsl.nodes import Condition, print_condition
from .dsl.normalize import normalize
from .table import Table

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PooledCandidate:
    condition: Condition
    score: float
    sources: frozenset[str]


@dataclass(frozen=True)
class EquivalenceClass:
    members: tuple[PooledCandidate, ...]
    vector: ExecutionVector
    cluster_score: float


@dataclass(frozen=True)
class Suggestion:
    condition: Condition
    score: float
    class_id: int
    vector: ExecutionVector


def pool_candidates(
    symbolic: list[tuple[Condition, float]],
    neural: list[tuple[Condition, float]],
    neurosymbolic: list[tuple[Condition, float]],
) -> list[PooledCandidate]:
    """Concatenate generator outputs; duplicates (same normal form) merge
    keeping the best score and the union of source tags."""
    merged: dict[str, PooledCandidate] = {}
    for source, candidates in (
        ("symbolic", symbolic),
        ("neural", neural),
        ("neurosymbolic", neurosymbolic),
    ):
        for cond, score in candidates:
            key = print_condition(normalize(cond))
            prev = merged.get(key)
            if prev is None:
                merged[key] = PooledCandidate(cond, score, frozenset({source}))
            else:
                merged[key] = PooledCandidate(
                    prev.condition if prev.score >= score else cond,
                    max(prev.score, score),
                    prev.sources | {source},
                )
    return list(merged.values())


def cluster_by_execution(
    pool: list[PooledCandidate],
    table: Table,
    target: int | None = None,
    today: dt.date | None = None,
) -> list[EquivalenceClass]:
    """Partition the pool by exact execution vector. Candidates that fail to
    execute are dropped with a warning; classes come back in ranking order."""
    evaluator = Evaluator(table, target=target, today=today)
    groups: dict[ExecutionVector, list[PooledCandidate]] = {}
    for cand in pool:
        try:
            vec = evaluator.execute(cand.condition)
        except ValueError as exc:
            log.warning(
                "dropping candidate %s: %s", print_condition(cand.condition), exc
            )
            continue
        groups.setdefault(vec, []).append(cand)

    classes = []
    for vec, members in groups.items():
        ordered = tuple(
            sorted(
                members,
                key=lambda c: (-c.score, print_condition(normalize(c.condition))),
            )
        )
        mean = sum(c.score for c in ordered) / len(ordered)
        classes.append(EquivalenceClass(ordered, vec, mean))
    classes.sort(key=lambda ec: (-ec.cluster_score, -ec.vector.popcount, ec.vector.bits))
    return classes


def rank_round_robin(classes: list[EquivalenceClass], k: int) -> list[Suggestion]:
    """Emit the best member of each class in cluster-score order, then the
    second-best members, and so on, stopping after k suggestions."""
    out: list[Suggestion] = []
    if k <= 0 or not classes:
        return out
    max_size = max(len(ec.members) for ec in classes)
    for pass_no in range(max_size):
        for class_id, ec in enumerate(classes):
            if pass_no < len(ec.members):
                member = ec.members[pass_no]
                out.append(Suggestion(member.condition, member.score, class_id, ec.vector))
                if len(out) == k:
                    return out
    return out
