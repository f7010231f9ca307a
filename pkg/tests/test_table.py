"""Table parsing, typing, sidecar formats, rule application, serialization."""

import datetime as dt
import json

import pytest

from tabfmt.dsl import parse_condition
from tabfmt.dsl.nodes import Rule
from tabfmt.table import (
    CellType,
    Format,
    TableParseError,
    TargetColumn,
    apply_rule,
    dump_table_json,
    infer_column_type,
    parse_number,
    parse_table,
    sidecar_from_table,
    table_from_json,
    table_to_csv,
    table_to_json,
)


class TestParseTable:
    def test_basic_shape_and_types(self):
        t = parse_table(
            "Name,Score,When\nalpha,1,2024-01-02\nbeta,2.5,2024-02-03\n"
        )
        assert t.headers == ("Name", "Score", "When")
        assert t.types == (CellType.TEXT, CellType.NUMERIC, CellType.DATE)
        assert t.n_rows == 2 and t.n_cols == 3
        assert t.cell(1, 1).parsed == 2.5
        assert t.cell(0, 2).parsed == dt.date(2024, 1, 2)

    def test_empty_input_rejected(self):
        with pytest.raises(TableParseError):
            parse_table("")

    def test_ragged_row_rejected(self):
        with pytest.raises(TableParseError, match="row 2"):
            parse_table("A,B\n1,2\n3\n")

    def test_duplicate_headers_get_suffixes(self):
        t = parse_table("Total,total,Total\n1,2,3\n")
        assert t.headers == ("Total", "total.2", "Total.3")
        assert t.column_index("total.2") == 1

    def test_column_index_missing_is_none(self):
        t = parse_table("A\n1\n")
        assert t.column_index("B") is None

    def test_headers_stripped(self):
        t = parse_table(" A , B \n1,2\n")
        assert t.headers == ("A", "B")


class TestTypeInference:
    def test_ninety_percent_boundary(self):
        nums = ["1"] * 9
        assert infer_column_type(nums + ["x"]) is CellType.NUMERIC
        assert infer_column_type(["1"] * 8 + ["x", "y"]) is CellType.TEXT

    def test_blanks_excluded_from_denominator(self):
        assert infer_column_type(["5", "", "", "6"]) is CellType.NUMERIC

    def test_all_blank_is_text(self):
        assert infer_column_type(["", "  ", ""]) is CellType.TEXT

    def test_dates(self):
        assert infer_column_type(["2024-01-01", "1/5/2024", "05-Jan-2024"]) is CellType.DATE

    def test_numbers_win_over_dates(self):
        # a column of bare years parses as numbers first
        assert infer_column_type(["2021", "2022"]) is CellType.NUMERIC


class TestParseNumber:
    def test_plain_and_separators(self):
        assert parse_number("1,234.5") == 1234.5
        assert parse_number("  42 ") == 42.0
        assert parse_number("-7") == -7.0

    def test_currency(self):
        assert parse_number("$500") == 500.0
        assert parse_number("-$1,000") == -1000.0

    def test_rejects_non_numbers(self):
        assert parse_number("") is None
        assert parse_number("abc") is None
        assert parse_number("nan") is None
        assert parse_number("inf") is None


class TestSidecar:
    def test_flat_entries_set_cell_formats(self):
        sidecar = {"cells": [{"row": 0, "col": 1, "fill": "#FF0000", "bold": True}]}
        t = parse_table("A,B\n1,2\n3,4\n", sidecar=sidecar)
        fmt = t.cell(0, 1).format
        assert fmt.fill == (255, 0, 0) and fmt.bold is True
        assert fmt.to_json()["fill"] == "#FF0000"
        assert t.cell(1, 1).format.is_empty()

    def test_out_of_bounds_rejected(self):
        with pytest.raises(TableParseError):
            parse_table("A\n1\n", sidecar={"cells": [{"row": 5, "col": 0}]})

    def test_round_trip(self):
        sidecar = {
            "cells": [
                {"row": 1, "col": 0, "fill": "#00FF00"},
                {"row": 0, "col": 1, "formula": "=A1*2"},
            ]
        }
        t = parse_table("A,B\n1,2\n3,4\n", sidecar=sidecar)
        back = sidecar_from_table(t)
        assert {(e["row"], e["col"]) for e in back["cells"]} == {(1, 0), (0, 1)}
        assert t.cell(0, 1).formula == "=A1*2"


class TestApplyRule:
    def test_formats_matching_target_cells_only(self):
        t = parse_table("Status,Qty\nopen,1\nshut,2\nopen,3\n")
        rule = Rule(
            condition=parse_condition('TextEquals([@Status], "open")'),
            format=Format(fill=(255, 255, 0)),
        )
        out = apply_rule(t, TargetColumn(index=1), rule)
        yellow = (255, 255, 0)
        assert [c.format.fill for c in out.columns[1]] == [yellow, None, yellow]
        # other column untouched, original table untouched
        assert all(c.format.is_empty() for c in out.columns[0])
        assert all(c.format.is_empty() for c in t.columns[1])

    def test_merge_keeps_unset_identifiers(self):
        sidecar = {"cells": [{"row": 0, "col": 0, "bold": True}]}
        t = parse_table("A\n1\n", sidecar=sidecar)
        rule = Rule(
            condition=parse_condition("[@A]>0"),
            format=Format(fill=(0, 0, 255)),
        )
        out = apply_rule(t, TargetColumn(index=0), rule)
        fmt = out.cell(0, 0).format
        assert fmt.fill == (0, 0, 255) and fmt.bold is True


class TestSerialization:
    def test_json_round_trip(self):
        sidecar = {"cells": [{"row": 0, "col": 1, "fill": "#ABCDEF", "italic": True}]}
        t = parse_table("A,B\nx,1\n\"\",2\n", sidecar=sidecar)
        back = table_from_json(table_to_json(t))
        assert back == t

    def test_dump_is_byte_stable(self):
        t = parse_table("A,B\n1,2\n")
        assert dump_table_json(t) == dump_table_json(parse_table("A,B\n1,2\n"))
        json.loads(dump_table_json(t))

    def test_csv_round_trip(self):
        text = "A,B\nx,1\ny,2\n"
        t = parse_table(text)
        assert table_to_csv(t) == text
