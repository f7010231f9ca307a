"""End-to-end suggestion pipeline."""

import json

import pytest

from conftest import FIXED_TODAY
from tabfmt.corpus import CorpusStore, make_record
from tabfmt.dsl import Evaluator, parse_condition
from tabfmt.formats import FALLBACK_FORMAT
from tabfmt.llm import ClientError, MockClient
from tabfmt.pipeline import suggest
from tabfmt.table import Format, TargetColumn, parse_table


class _FailingClient:
    def complete(self, prompt):
        raise ClientError("endpoint offline")


class _GarbageClient:
    def complete(self, prompt):
        return "no sections here at all"


class TestSymbolic:
    def test_returns_up_to_k(self, fig1_table):
        result = suggest(fig1_table, TargetColumn(1), k=5, today=FIXED_TODAY)
        assert 1 <= len(result.suggestions) <= 5
        assert result.llm_fallback is False

    def test_k_validation(self, fig1_table):
        with pytest.raises(ValueError):
            suggest(fig1_table, TargetColumn(1), k=0)

    def test_first_k_vectors_distinct(self, fig1_table):
        result = suggest(fig1_table, TargetColumn(1), k=5, today=FIXED_TODAY)
        vecs = [s.vector for s in result.suggestions]
        assert len(set(vecs)) == len(vecs)

    def test_masks_are_faithful(self, fig1_table):
        result = suggest(fig1_table, TargetColumn(1), k=5, today=FIXED_TODAY)
        ev = Evaluator(fig1_table, target=1, today=FIXED_TODAY)
        for s in result.suggestions:
            assert ev.execute(s.condition) == s.vector
            reparsed = parse_condition(s.rule_text)
            assert ev.execute(reparsed) == s.vector

    def test_byte_deterministic(self, fig1_table):
        a = suggest(fig1_table, TargetColumn(2), k=5, seed=3, today=FIXED_TODAY)
        b = suggest(fig1_table, TargetColumn(2), k=5, seed=3, today=FIXED_TODAY)
        assert json.dumps(a.to_json(), sort_keys=True) == json.dumps(
            b.to_json(), sort_keys=True
        )

    def test_k1(self, fig1_table):
        result = suggest(fig1_table, TargetColumn(1), k=1, today=FIXED_TODAY)
        assert len(result.suggestions) == 1

    def test_prefix_stability_across_k(self, fig1_table):
        small = suggest(fig1_table, TargetColumn(1), k=2, today=FIXED_TODAY)
        large = suggest(fig1_table, TargetColumn(1), k=5, today=FIXED_TODAY)
        assert [s.rule_text for s in small.suggestions] == [
            s.rule_text for s in large.suggestions[:2]
        ]

    def test_fallback_format_without_corpus(self, fig1_table):
        result = suggest(fig1_table, TargetColumn(1), k=3, today=FIXED_TODAY)
        assert all(s.format == FALLBACK_FORMAT for s in result.suggestions)

    def test_json_shape(self, fig1_table):
        result = suggest(fig1_table, TargetColumn(1), k=2, today=FIXED_TODAY)
        doc = result.to_json()
        assert set(doc) == {"suggestions", "llm_fallback", "warnings"}
        for s in doc["suggestions"]:
            assert {"rule_text", "rule_ast", "score", "class_id",
                    "highlight_mask", "mask_length", "highlight_count",
                    "format", "description"} <= set(s)
            assert s["mask_length"] == fig1_table.n_rows


class TestWithClient:
    def test_mock_client_contributes(self, fig1_table):
        result = suggest(
            fig1_table, TargetColumn(1), k=5, client=MockClient(), today=FIXED_TODAY
        )
        assert result.llm_fallback is False
        assert result.suggestions

    def test_failing_client_falls_back(self, fig1_table):
        result = suggest(
            fig1_table, TargetColumn(1), k=5, client=_FailingClient(),
            today=FIXED_TODAY,
        )
        assert result.llm_fallback is True
        assert result.suggestions, "symbolic lane must still answer"
        assert any("llm unavailable" in w for w in result.warnings)

    def test_garbage_response_falls_back(self, fig1_table):
        result = suggest(
            fig1_table, TargetColumn(1), k=5, client=_GarbageClient(),
            today=FIXED_TODAY,
        )
        assert result.llm_fallback is True

    def test_fallback_equals_symbolic_output(self, fig1_table):
        plain = suggest(fig1_table, TargetColumn(1), k=5, today=FIXED_TODAY)
        failed = suggest(
            fig1_table, TargetColumn(1), k=5, client=_FailingClient(),
            today=FIXED_TODAY,
        )
        assert [s.rule_text for s in plain.suggestions] == [
            s.rule_text for s in failed.suggestions
        ]


class TestWithCorpus:
    def test_corpus_formats_reach_suggestions(self):
        t = parse_table("Status\nopen\nshut\nopen\n")
        store = CorpusStore()
        green = Format(fill=(0, 128, 0))
        for i in range(3):
            store.add(
                make_record(
                    f"r{i}", t, parse_condition('TextEquals([@Status], "open")'),
                    green, provenance="test",
                ),
                persist=False,
            )
        result = suggest(t, TargetColumn(0), k=3, corpus=store, today=FIXED_TODAY)
        from tabfmt.colors import nearest_web_color

        greens = [
            s for s in result.suggestions
            if s.format.fill is not None and "green" in nearest_web_color(s.format.fill)
        ]
        assert greens, "retrieved corpus format should color some suggestion"
