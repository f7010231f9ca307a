"""In-memory table model: ingestion from CSV plus a format sidecar, type
inference, and rule application.

A table is an immutable grid of typed cells. Each cell keeps the raw entered
string, its parsed typed value, and a format (possibly the empty format).
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
import io
import json
from dataclasses import dataclass, replace

from .colors import RGB, parse_hex, to_hex
from .dates import parse_date


class CellType(enum.Enum):
    TEXT = "text"
    NUMERIC = "numeric"
    DATE = "date"


class TableParseError(ValueError):
    """Raised on malformed CSV or sidecar input."""


@dataclass(frozen=True)
class Format:
    """Cell formatting. All-absent fields mean "no format".

    Merging (rule application) overwrites only the fields the incoming
    format sets; absent fields preserve whatever the cell already had.
    """

    fill: RGB | None = None
    font: RGB | None = None
    bold: bool | None = None
    italic: bool | None = None
    underline: bool | None = None

    IDENTIFIERS = ("fill", "font", "bold", "italic", "underline")

    def is_empty(self) -> bool:
        return all(getattr(self, name) is None for name in self.IDENTIFIERS)

    def identifiers(self) -> frozenset[str]:
        """Names of the format properties this value modifies."""
        return frozenset(n for n in self.IDENTIFIERS if getattr(self, n) is not None)

    def merge_over(self, base: "Format") -> "Format":
        """This format's set fields overwrite `base`; absent fields keep base."""
        return Format(
            fill=self.fill if self.fill is not None else base.fill,
            font=self.font if self.font is not None else base.font,
            bold=self.bold if self.bold is not None else base.bold,
            italic=self.italic if self.italic is not None else base.italic,
            underline=self.underline if self.underline is not None else base.underline,
        )

    def to_json(self) -> dict:
        out: dict = {}
        if self.fill is not None:
            out["fill"] = to_hex(self.fill)
        if self.font is not None:
            out["font"] = to_hex(self.font)
        for name in ("bold", "italic", "underline"):
            v = getattr(self, name)
            if v is not None:
                out[name] = v
        return out

    @staticmethod
    def from_json(doc: dict) -> "Format":
        return Format(
            fill=parse_hex(doc["fill"]) if "fill" in doc else None,
            font=parse_hex(doc["font"]) if "font" in doc else None,
            bold=doc.get("bold"),
            italic=doc.get("italic"),
            underline=doc.get("underline"),
        )


NO_FORMAT = Format()


@dataclass(frozen=True)
class Cell:
    value: str
    parsed: str | float | dt.date | None
    ctype: CellType
    format: Format = NO_FORMAT
    formula: str | None = None

    @property
    def is_blank(self) -> bool:
        return self.value.strip() == ""


@dataclass(frozen=True)
class TargetColumn:
    """0-based index of the column suggestions are generated for."""

    index: int


@dataclass(frozen=True)
class Table:
    headers: tuple[str, ...]
    types: tuple[CellType, ...]
    columns: tuple[tuple[Cell, ...], ...]

    def __post_init__(self) -> None:
        if len(self.headers) != len(self.columns) or len(self.types) != len(self.columns):
            raise ValueError("headers, types and columns must have equal length")
        lengths = {len(c) for c in self.columns}
        if len(lengths) > 1:
            raise ValueError("all columns must have equal length")

    @property
    def n_cols(self) -> int:
        return len(self.headers)

    @property
    def n_rows(self) -> int:
        return len(self.columns[0]) if self.columns else 0

    def cell(self, row: int, col: int) -> Cell:
        return self.columns[col][row]

    def column_index(self, header: str) -> int | None:
        """Case-insensitive header lookup; None when absent."""
        want = header.strip().casefold()
        for i, h in enumerate(self.headers):
            if h.casefold() == want:
                return i
        return None


def value_key(cell: Cell) -> object:
    """Identity used for duplicate/unique accounting.

    Parsed typed values compare as themselves; text (and unparseable cells)
    compare trimmed and case-folded.
    """
    if cell.ctype is not CellType.TEXT and cell.parsed is not None:
        return cell.parsed
    return cell.value.strip().casefold()


_CURRENCY = "$€£¥"
_NON_FINITE = {"nan", "inf", "-inf", "+inf", "infinity", "-infinity", "+infinity"}


def parse_number(text: str) -> float | None:
    """Parse a decimal number, tolerating thousands separators and a
    leading currency symbol. Returns None when the text is not numeric."""
    s = text.strip()
    if not s:
        return None
    sign = ""
    if s[0] in "+-":
        sign, s = s[0], s[1:]
    if s[:1] in _CURRENCY:
        s = s[1:]
    s = s.replace(",", "").strip()
    if not s or s.lower() in _NON_FINITE:
        return None
    try:
        return float(sign + s)
    except ValueError:
        return None


def infer_column_type(raw_values: list[str]) -> CellType:
    """Numeric if at least 90% of non-blank values parse as numbers, Date if
    at least 90% parse as dates, else Text. All-blank columns are Text."""
    present = [v for v in raw_values if v.strip()]
    if not present:
        return CellType.TEXT
    n = len(present)
    numeric = sum(1 for v in present if parse_number(v) is not None)
    if numeric / n >= 0.9:
        return CellType.NUMERIC
    dated = sum(1 for v in present if parse_date(v) is not None)
    if dated / n >= 0.9:
        return CellType.DATE
    return CellType.TEXT


def _parse_cell_value(raw: str, ctype: CellType) -> str | float | dt.date | None:
    if raw.strip() == "":
        return None
    if ctype is CellType.NUMERIC:
        return parse_number(raw)
    if ctype is CellType.DATE:
        return parse_date(raw)
    return raw


def _dedupe_headers(names: list[str]) -> list[str]:
    # Duplicate headers (after case-folding) get ".2", ".3", ... suffixes.
    seen: dict[str, int] = {}
    out: list[str] = []
    for name in names:
        key = name.strip().casefold()
        if key not in seen:
            seen[key] = 1
            out.append(name)
            continue
        n = seen[key] + 1
        candidate = f"{name}.{n}"
        while candidate.casefold() in seen:
            n += 1
            candidate = f"{name}.{n}"
        seen[key] = n
        seen[candidate.casefold()] = 1
        out.append(candidate)
    return out


def parse_table(csv_text: str, sidecar: dict | None = None) -> Table:
    """Build a Table from CSV text and an optional format sidecar.

    The first CSV record is the header row. Ragged records raise
    TableParseError naming the offending data row. The sidecar addresses
    cells 0-based with row 0 = first data row; addressing outside the grid
    is an error.
    """
    records = list(csv.reader(io.StringIO(csv_text)))
    if not records:
        raise TableParseError("empty input: a header row is required")
    headers = _dedupe_headers([h.strip() for h in records[0]])
    n = len(headers)
    rows = records[1:]
    for i, row in enumerate(rows):
        if len(row) != n:
            raise TableParseError(
                f"data row {i + 1} has {len(row)} fields, expected {n}"
            )
    m = len(rows)

    raw_columns = [[rows[r][c] for r in range(m)] for c in range(n)]
    types = [infer_column_type(col) for col in raw_columns]

    fill_by_cell: dict[tuple[int, int], Format] = {}
    formula_by_cell: dict[tuple[int, int], str] = {}
    if sidecar is not None:
        entries = sidecar.get("cells", [])
        if not isinstance(entries, list):
            raise TableParseError('sidecar "cells" must be a list')
        for i, entry in enumerate(entries):
            try:
                col = int(entry["col"])
                row = int(entry["row"])
            except (KeyError, TypeError, ValueError):
                raise TableParseError(f"sidecar entry {i} lacks valid col/row")
            if not (0 <= col < n and 0 <= row < m):
                raise TableParseError(
                    f"sidecar entry {i} addresses cell (row {row}, col {col}) "
                    f"outside the {m}x{n} grid"
                )
            try:
                fmt = Format.from_json(entry)
            except (ValueError, TypeError) as exc:
                raise TableParseError(f"sidecar entry {i}: {exc}")
            fill_by_cell[(row, col)] = fmt
            if entry.get("formula"):
                formula_by_cell[(row, col)] = str(entry["formula"])

    columns = []
    for c in range(n):
        cells = []
        for r in range(m):
            raw = raw_columns[c][r]
            cells.append(
                Cell(
                    value=raw,
                    parsed=_parse_cell_value(raw, types[c]),
                    ctype=types[c],
                    format=fill_by_cell.get((r, c), NO_FORMAT),
                    formula=formula_by_cell.get((r, c)),
                )
            )
        columns.append(tuple(cells))
    return Table(headers=tuple(headers), types=tuple(types), columns=tuple(columns))


def apply_rule(table: Table, target: TargetColumn, rule, today: dt.date | None = None) -> Table:
    """Apply a rule's format to the target column's cells matching the
    condition. Returns a new Table; the input is untouched."""
    from .dsl.evaluate import execute

    mask = execute(rule.condition, table, target=target.index, today=today)
    bits = mask.to_bools()
    old = table.columns[target.index]
    new_cells = tuple(
        replace(cell, format=rule.format.merge_over(cell.format)) if bits[r] else cell
        for r, cell in enumerate(old)
    )
    columns = list(table.columns)
    columns[target.index] = new_cells
    return Table(headers=table.headers, types=table.types, columns=tuple(columns))


def table_to_json(table: Table) -> dict:
    """Canonical JSON document: headers, per-column type, per-cell value with
    format and formula omitted when absent."""
    cols = []
    for column in table.columns:
        col_doc = []
        for cell in column:
            doc: dict = {"v": cell.value}
            if not cell.format.is_empty():
                doc["fmt"] = cell.format.to_json()
            if cell.formula is not None:
                doc["formula"] = cell.formula
            col_doc.append(doc)
        cols.append(col_doc)
    return {
        "headers": list(table.headers),
        "types": [t.value for t in table.types],
        "columns": cols,
    }


def table_from_json(doc: dict) -> Table:
    headers = tuple(doc["headers"])
    types = tuple(CellType(t) for t in doc["types"])
    columns = []
    for c, col_doc in enumerate(doc["columns"]):
        cells = []
        for cell_doc in col_doc:
            raw = cell_doc["v"]
            cells.append(
                Cell(
                    value=raw,
                    parsed=_parse_cell_value(raw, types[c]),
                    ctype=types[c],
                    format=Format.from_json(cell_doc.get("fmt", {})),
                    formula=cell_doc.get("formula"),
                )
            )
        columns.append(tuple(cells))
    return Table(headers=headers, types=types, columns=tuple(columns))


def dump_table_json(table: Table) -> str:
    """Byte-stable serialization of the canonical table document."""
    return json.dumps(table_to_json(table), sort_keys=True, separators=(",", ":"))


def table_to_csv(table: Table) -> str:
    """Header row plus raw cell values, one record per data row."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.headers)
    for r in range(table.n_rows):
        writer.writerow([table.columns[c][r].value for c in range(table.n_cols)])
    return buf.getvalue()


def sidecar_from_table(table: Table) -> dict:
    """Format sidecar document listing every formatted or formula cell."""
    cells = []
    for c in range(table.n_cols):
        for r in range(table.n_rows):
            cell = table.columns[c][r]
            if cell.format.is_empty() and cell.formula is None:
                continue
            entry: dict = {"col": c, "row": r}
            entry.update(cell.format.to_json())
            if cell.formula is not None:
                entry["formula"] = cell.formula
            cells.append(entry)
    return {"cells": cells}
