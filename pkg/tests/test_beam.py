"""Levelized beam search over enumerated predicates."""

import pytest

from conftest import FIXED_TODAY
from tabfmt.dsl import normalize, parse_condition, print_condition
from tabfmt.dsl.nodes import Cmp, ColumnRef, Const, Literal, TextPred
from tabfmt.generator.beam import BeamCandidate, BeamConfig, Component, beam_synthesize
from tabfmt.generator.predicates import enumerate_predicates
from tabfmt.generator.ranker import default_ranker
from tabfmt.profiler import extract_properties
from tabfmt.table import TargetColumn, parse_table


@pytest.fixture(scope="module")
def ranker():
    return default_ranker()


def _run(table, col_index, ranker, *, components=(), boosted=frozenset(), **cfg_kw):
    col = TargetColumn(col_index)
    props = extract_properties(table, col, today=FIXED_TODAY)
    preds = enumerate_predicates(props, table, col)
    cfg = BeamConfig(**cfg_kw)
    return beam_synthesize(
        preds, list(components), table, col, cfg, ranker,
        boosted_terms=boosted, today=FIXED_TODAY, props=props,
    )


class TestBeam:
    def test_empty_inputs_yield_nothing(self, ranker, fig1_table):
        cfg = BeamConfig()
        out = beam_synthesize([], [], fig1_table, TargetColumn(0), cfg, ranker)
        assert out == []

    def test_config_validation(self):
        with pytest.raises(ValueError):
            BeamConfig(beam_width=0)
        with pytest.raises(ValueError):
            BeamConfig(max_depth=0)

    def test_candidates_unique_by_normal_form(self, ranker, fig1_table):
        cands = _run(fig1_table, 1, ranker)
        keys = [print_condition(normalize(c.condition)) for c in cands]
        assert len(keys) == len(set(keys))

    def test_respects_max_candidates(self, ranker, fig1_table):
        cands = _run(fig1_table, 1, ranker, max_candidates=15)
        assert len(cands) <= 15

    def test_atoms_survive_overflow(self, ranker, fig1_table):
        # every single-literal candidate must survive a cap larger than the
        # atom count, whatever its score
        unlimited = _run(fig1_table, 1, ranker, max_candidates=100000)
        atoms = {
            print_condition(normalize(c.condition))
            for c in unlimited
            if len(c.condition.clauses) == 1 and len(c.condition.clauses[0]) == 1
        }
        capped = _run(fig1_table, 1, ranker, max_candidates=max(20, len(atoms)))
        kept = {print_condition(normalize(c.condition)) for c in capped}
        assert atoms <= kept

    def test_deterministic(self, ranker, fig1_table):
        a = _run(fig1_table, 2, ranker)
        b = _run(fig1_table, 2, ranker)
        assert [(print_condition(x.condition), x.score) for x in a] == [
            (print_condition(x.condition), x.score) for x in b
        ]

    def test_sorted_by_boosted_score(self, ranker, fig1_table):
        cands = _run(fig1_table, 2, ranker)
        scores = [c.boosted_score for c in cands]
        assert scores == sorted(scores, reverse=True)

    def test_boost_lifts_matching_terms(self, ranker, fig1_table):
        boosted = _run(fig1_table, 1, ranker, boosted=frozenset({"Complete"}))
        plain = {print_condition(c.condition): c for c in _run(fig1_table, 1, ranker)}
        for cand in boosted:
            base = plain.get(print_condition(cand.condition))
            if base is None:
                continue
            consts = print_condition(cand.condition)
            if '"Complete"' in consts:
                # reward is 10% of the score magnitude, so it lifts the
                # candidate whichever sign the logit has
                assert cand.boosted_score == pytest.approx(
                    base.score + 0.1 * abs(base.score)
                )
                assert cand.boosted_score >= base.score
                assert cand.score == pytest.approx(base.score)
            elif "Complete" not in consts:
                assert cand.boosted_score == pytest.approx(base.boosted_score)

    def test_neural_component_enters_and_is_boosted(self, ranker, fig1_table):
        lits = (
            Literal(
                Cmp(ColumnRef("Budget"), ">", ColumnRef("Cost")),
            ),
        )
        comp = Component(literals=lits, origin="neural")
        cands = _run(fig1_table, 2, ranker, components=[comp])
        target = parse_condition("[@Budget]>[@Cost]")
        hits = [c for c in cands if normalize(c.condition) == normalize(target)]
        assert hits, "neural component must appear among candidates"
        assert hits[0].boosted_score == pytest.approx(
            hits[0].score + 0.1 * abs(hits[0].score)
        )
        assert hits[0].boosted_score >= hits[0].score

    def test_component_open_slot_instantiates_target(self, fig1_table, ranker):
        comp = Component(
            literals=(Literal(TextPred("TextEquals", "Complete", None)),),
            origin="neural",
        )
        cands = _run(fig1_table, 1, ranker, components=[comp])
        want = normalize(parse_condition('TextEquals([@Status], "Complete")'))
        assert any(normalize(c.condition) == want for c in cands)

    def test_invalid_component_skipped(self, fig1_table, ranker):
        # a numeric comparison against a text column cannot instantiate
        comp = Component(
            literals=(Literal(Cmp(ColumnRef(None), ">", Const(5.0))),),
            origin="neural",
        )
        cands = _run(fig1_table, 1, ranker, components=[comp])
        assert all(">" not in print_condition(c.condition) or
                   "[@Status]>" not in print_condition(c.condition)
                   for c in cands)

    def test_multi_clause_conditions_reachable(self, ranker, fig1_table):
        cands = _run(fig1_table, 1, ranker, max_candidates=100000)
        assert any(len(c.condition.clauses) > 1 for c in cands)
        assert any(
            len(c.condition.clauses) == 1 and len(c.condition.clauses[0]) > 1
            for c in cands
        )
