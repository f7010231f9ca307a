"""Format suggestion: corpus retrieval by table/rule similarity, weighted
frequency voting over format identifiers, and shade grounding against the
current sheet.

Colors vote by nearest web color name rather than raw hex, so near-identical
fills pool their weight.
"""

from __future__ import annotations

from dataclasses import dataclass

from .colors import CSS_COLORS, RGB, lightness, nearest_web_color, with_lightness
from .corpus import CorpusRecord, CorpusStore
from .dsl.nodes import Condition
from .dsl.normalize import condition_constants, literal_sketches
from .table import Format, Table

FALLBACK_FORMAT = Format(fill=(255, 255, 0))

LIGHT_SHADE = 0.65
DARK_SHADE = 0.35
LIGHT_TARGET = 0.8
DARK_TARGET = 0.25


@dataclass(frozen=True)
class SimilarityWeights:
    """Relative importance of the four signature sets. The defaults are
    hand-set and overridable; they are not fitted to anything."""

    w_header: float = 0.4
    w_formula: float = 0.1
    w_predicate: float = 0.3
    w_constant: float = 0.2

    def __post_init__(self) -> None:
        values = (self.w_header, self.w_formula, self.w_predicate, self.w_constant)
        if any(v < 0 for v in values):
            raise ValueError("similarity weights must be non-negative")
        if abs(sum(values) - 1.0) > 1e-9:
            raise ValueError("similarity weights must sum to 1")


@dataclass(frozen=True)
class RetrievalConfig:
    lambda_n: int = 50
    lambda_t: float = 0.3

    def __post_init__(self) -> None:
        if self.lambda_n < 1:
            raise ValueError("lambda_n must be at least 1")
        if not 0.0 <= self.lambda_t <= 1.0:
            raise ValueError("lambda_t must be in [0, 1]")


def _jaccard(a: frozenset, b: frozenset) -> float:
    # Two empty sets agree perfectly.
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def table_signature(table: Table) -> tuple[frozenset[str], frozenset[str]]:
    headers = frozenset(h.casefold() for h in table.headers)
    formulas = frozenset(c.formula for col in table.columns for c in col if c.formula)
    return headers, formulas


def similarity(
    record: CorpusRecord,
    table: Table,
    cond: Condition,
    w: SimilarityWeights | None = None,
) -> float:
    """Weighted agreement of header, formula, predicate-sketch and constant
    sets between a stored record and the live (table, condition) pair."""
    w = w or SimilarityWeights()
    headers, formulas = table_signature(table)
    return (
        w.w_header * _jaccard(record.header_set, headers)
        + w.w_formula * _jaccard(record.formula_set, formulas)
        + w.w_predicate * _jaccard(record.predicate_sketch_set, literal_sketches(cond))
        + w.w_constant * _jaccard(record.constant_set, condition_constants(cond))
    )


def retrieve_similar(
    corpus: CorpusStore | list[CorpusRecord],
    table: Table,
    cond: Condition,
    w: SimilarityWeights | None = None,
    cfg: RetrievalConfig | None = None,
) -> list[CorpusRecord]:
    """Records in descending similarity, cut at the first of: lambda_n
    records taken, or similarity below lambda_t."""
    w = w or SimilarityWeights()
    cfg = cfg or RetrievalConfig()
    scored = sorted(
        ((similarity(r, table, cond, w), r) for r in corpus),
        key=lambda pair: (-pair[0], pair[1].id),
    )
    out = []
    for score, record in scored:
        if score < cfg.lambda_t or len(out) >= cfg.lambda_n:
            break
        out.append(record)
    return out


@dataclass(frozen=True)
class FormatCandidateSet:
    """Formats voting on the suggestion: the sheet's own formats count twice
    as much as retrieved corpus formats."""

    sheet: tuple[Format, ...]
    corpus: tuple[Format, ...]

    SHEET_WEIGHT = 2
    CORPUS_WEIGHT = 1

    def weighted(self) -> list[tuple[Format, int]]:
        return [(f, self.SHEET_WEIGHT) for f in self.sheet] + [
            (f, self.CORPUS_WEIGHT) for f in self.corpus
        ]


def sheet_formats(table: Table) -> tuple[Format, ...]:
    """Distinct non-empty formats present anywhere in the sheet, in first
    appearance order (row-major)."""
    seen: list[Format] = []
    for r in range(table.n_rows):
        for c in range(table.n_cols):
            fmt = table.columns[c][r].format
            if not fmt.is_empty() and fmt not in seen:
                seen.append(fmt)
    return tuple(seen)


def _vote_color(votes: list[tuple[RGB, int]]) -> RGB:
    # Bucket by nearest web color name; heaviest bucket wins, ties by name.
    buckets: dict[str, int] = {}
    for rgb, weight in votes:
        name = nearest_web_color(rgb)
        buckets[name] = buckets.get(name, 0) + weight
    best = sorted(buckets.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]
    return CSS_COLORS[best]


def _vote_bool(votes: list[tuple[bool, int]]) -> bool:
    true_w = sum(w for v, w in votes if v)
    return true_w * 2 >= sum(w for _, w in votes)


def select_format(candidates: FormatCandidateSet) -> Format:
    """Keep each format identifier whose weighted presence average exceeds
    0.5, then pick its weighted-frequency winner. No candidates at all (or
    none passing) falls back to a solid yellow fill."""
    weighted = candidates.weighted()
    total = sum(w for _, w in weighted)
    if total == 0:
        return FALLBACK_FORMAT
    chosen: dict[str, object] = {}
    for name in Format.IDENTIFIERS:
        votes = [(getattr(f, name), w) for f, w in weighted if getattr(f, name) is not None]
        present = sum(w for _, w in votes)
        if present * 2 <= total:
            continue
        if name in ("fill", "font"):
            chosen[name] = _vote_color(votes)
        else:
            chosen[name] = _vote_bool(votes)
    if not chosen:
        return FALLBACK_FORMAT
    return Format(**chosen)


def ground_format(fmt: Format, table: Table) -> Format:
    """Shift the suggested fill toward the sheet's dominant shade family.

    When at least 75% of the sheet's fills are light (HSL lightness above
    0.65), a not-yet-light suggested fill is re-lit to lightness 0.8 at the
    same hue; symmetrically, dark-dominated sheets pull the fill down to
    0.25. Anything else passes through untouched."""
    if fmt.fill is None:
        return fmt
    fills = [
        cell.format.fill
        for col in table.columns
        for cell in col
        if cell.format.fill is not None
    ]
    if not fills:
        return fmt
    n = len(fills)
    light = sum(1 for f in fills if lightness(f) > LIGHT_SHADE)
    dark = sum(1 for f in fills if lightness(f) < DARK_SHADE)
    fill_l = lightness(fmt.fill)
    if light / n >= 0.75 and fill_l <= LIGHT_SHADE:
        return Format(
            fill=with_lightness(fmt.fill, LIGHT_TARGET),
            font=fmt.font,
            bold=fmt.bold,
            italic=fmt.italic,
            underline=fmt.underline,
        )
    if dark / n >= 0.75 and fill_l >= DARK_SHADE:
        return Format(
            fill=with_lightness(fmt.fill, DARK_TARGET),
            font=fmt.font,
            bold=fmt.bold,
            italic=fmt.italic,
            underline=fmt.underline,
        )
    return fmt


def suggest_format(
    table: Table,
    cond: Condition,
    corpus: CorpusStore | list[CorpusRecord] | None = None,
    w: SimilarityWeights | None = None,
    cfg: RetrievalConfig | None = None,
) -> Format:
    """Retrieval, selection and grounding in one step."""
    retrieved = retrieve_similar(corpus or [], table, cond, w, cfg)
    candidates = FormatCandidateSet(
        sheet=sheet_formats(table),
        corpus=tuple(r.format for r in retrieved),
    )
    return ground_format(select_format(candidates), table)
