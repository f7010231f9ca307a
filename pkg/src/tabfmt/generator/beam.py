"""Beam search over candidate conditions.

Level 1 holds single-literal conditions (and instantiated components);
each later level extends beam survivors with one more literal, either
AND-ed into the working clause or OR-ed as a new clause. A trained ranker
scores every node; nodes touching terms suggested by the text generator, or
built from its components, get a 10% score boost that biases survival.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, replace

import numpy as np

from ..dsl.evaluate import Evaluator, TypeMismatchError, UnknownColumnError
from ..dsl.nodes import (
    MAX_CLAUSES,
    MAX_LITERALS,
    Condition,
    Literal,
    Predicate,
    GeneralPred,
    TextPred,
    print_condition,
)
from ..dsl.normalize import condition_columns, condition_constants, normalize
from ..profiler import extract_properties
from ..table import Table, TargetColumn
from .features import featurize
from .ranker import RankerModel


@dataclass(frozen=True)
class Component:
    """A reusable template of one or two literals. A literal whose predicate
    has `col=None` is an open slot, filled with the target column on
    instantiation. origin records which generator contributed it."""

    literals: tuple[Literal, ...]
    origin: str = "symbolic"

    def instantiate(self, target_header: str) -> tuple[Literal, ...]:
        filled = []
        for lit in self.literals:
            pred = lit.pred
            if getattr(pred, "col", "missing") is None:
                pred = replace(pred, col=target_header)
            filled.append(Literal(pred, lit.negated))
        return tuple(filled)


@dataclass(frozen=True)
class BeamConfig:
    beam_width: int = 10
    max_depth: int = 5
    boost_fraction: float = 0.10
    max_candidates: int = 200

    def __post_init__(self) -> None:
        if self.beam_width < 1 or self.max_depth < 1:
            raise ValueError("beam_width and max_depth must be at least 1")


@dataclass(frozen=True)
class BeamCandidate:
    condition: Condition
    score: float
    boosted_score: float


@dataclass
class _Node:
    clauses: tuple[tuple[Literal, ...], ...]
    clause_vecs: list[np.ndarray]
    key: str
    neural: bool
    score: float = 0.0
    boosted: float = 0.0

    @property
    def vec(self) -> np.ndarray:
        out = self.clause_vecs[0].copy()
        for v in self.clause_vecs[1:]:
            out |= v
        return out


_NEGATABLE_GENERAL = {"Blanks"}


def _negatable(pred: Predicate) -> bool:
    if isinstance(pred, TextPred):
        return True
    return isinstance(pred, GeneralPred) and pred.kind in _NEGATABLE_GENERAL


def beam_synthesize(
    predicates: list[Predicate],
    neural_components: list[Component],
    table: Table,
    col: TargetColumn,
    cfg: BeamConfig,
    ranker: RankerModel,
    boosted_terms: frozenset[str] | set[str] = frozenset(),
    today: dt.date | None = None,
    props: dict | None = None,
) -> list[BeamCandidate]:
    if not predicates and not neural_components:
        return []
    evaluator = Evaluator(table, target=col.index, today=today)
    if props is None:
        props = extract_properties(table, col, today=evaluator.today)
    ctype = table.types[col.index]
    m = table.n_rows
    boosts = {t.casefold() for t in boosted_terms}

    def is_boosted(cond: Condition, neural: bool) -> bool:
        if neural:
            return True
        if not boosts:
            return False
        terms = {c.casefold() for c in condition_constants(cond)}
        terms |= condition_columns(cond)
        return bool(terms & boosts)

    # Base literal inventory used at level 1 and for every extension.
    base_literals: list[Literal] = []
    for pred in predicates:
        base_literals.append(Literal(pred))
        if _negatable(pred):
            base_literals.append(Literal(pred, negated=True))

    def literal_vec(lit: Literal) -> np.ndarray:
        return evaluator.literal_vector(lit)

    def make_node(
        clauses: tuple[tuple[Literal, ...], ...],
        clause_vecs: list[np.ndarray],
        neural: bool,
    ) -> _Node:
        cond = Condition(clauses)
        return _Node(
            clauses=clauses,
            clause_vecs=clause_vecs,
            key=print_condition(normalize(cond)),
            neural=neural,
        )

    def score_nodes(nodes: list[_Node]) -> None:
        if not nodes:
            return
        rows = []
        for node in nodes:
            cond = Condition(node.clauses)
            fraction = float(node.vec.sum()) / m if m else 0.0
            rows.append(featurize(cond, fraction, ctype, props, m))
        scores = ranker.score_batch(np.stack(rows))
        for node, s in zip(nodes, scores):
            node.score = float(s)
            cond = Condition(node.clauses)
            if is_boosted(cond, node.neural):
                # Reward of 10% of the score's magnitude. Scores are logits
                # and routinely negative; a bare multiply would push boosted
                # nodes DOWN the beam there, inverting the mechanism.
                node.boosted = node.score + cfg.boost_fraction * abs(node.score)
            else:
                node.boosted = node.score

    # Level 1: single literals plus component instantiations.
    level: list[_Node] = []
    seen: set[str] = set()
    for lit in base_literals:
        node = make_node(((lit,),), [literal_vec(lit)], neural=False)
        if node.key not in seen:
            seen.add(node.key)
            level.append(node)
    target_header = table.headers[col.index]
    for comp in neural_components:
        lits = comp.instantiate(target_header)
        if not (1 <= len(lits) <= MAX_LITERALS):
            continue
        cond = Condition((lits,))
        try:
            evaluator.validate(cond)
        except (UnknownColumnError, TypeMismatchError):
            continue
        vec = literal_vec(lits[0]).copy()
        for lit in lits[1:]:
            vec &= literal_vec(lit)
        node = make_node((lits,), [vec], neural=comp.origin == "neural")
        if node.key not in seen:
            seen.add(node.key)
            level.append(node)

    score_nodes(level)
    best: dict[str, BeamCandidate] = {}
    atom_keys = {node.key for node in level}

    def record(nodes: list[_Node]) -> None:
        for node in nodes:
            cand = BeamCandidate(Condition(node.clauses), node.score, node.boosted)
            prev = best.get(node.key)
            if prev is None or cand.boosted_score > prev.boosted_score:
                best[node.key] = cand

    record(level)

    for _ in range(1, cfg.max_depth):
        survivors = sorted(level, key=lambda n: (-n.boosted, n.key))[: cfg.beam_width]
        nxt: list[_Node] = []
        for node in survivors:
            last = node.clauses[-1]
            for lit in base_literals:
                if len(last) < MAX_LITERALS and lit not in last:
                    clauses = node.clauses[:-1] + (last + (lit,),)
                    vecs = node.clause_vecs[:-1] + [node.clause_vecs[-1] & literal_vec(lit)]
                    child = make_node(clauses, vecs, node.neural)
                    if child.key not in seen:
                        seen.add(child.key)
                        nxt.append(child)
                if len(node.clauses) < MAX_CLAUSES:
                    clauses = node.clauses + ((lit,),)
                    vecs = node.clause_vecs + [literal_vec(lit)]
                    child = make_node(clauses, vecs, node.neural)
                    if child.key not in seen:
                        seen.add(child.key)
                        nxt.append(child)
        if not nxt:
            break
        score_nodes(nxt)
        record(nxt)
        level = nxt

    ranked = sorted(best.values(), key=lambda c: (-c.boosted_score, print_condition(normalize(c.condition))))
    if len(ranked) <= cfg.max_candidates:
        return ranked
    # When the cap overflows, level-1 candidates always survive: they are
    # the atoms every deeper candidate is assembled from, and dropping one
    # can silence an execution class that nothing else reaches.
    atoms = [c for c in ranked if print_condition(normalize(c.condition)) in atom_keys]
    rest = [c for c in ranked if print_condition(normalize(c.condition)) not in atom_keys]
    keep = atoms[: cfg.max_candidates]
    keep += rest[: cfg.max_candidates - len(keep)]
    return sorted(keep, key=lambda c: (-c.boosted_score, print_condition(normalize(c.condition))))
