"""Rule corpus persistence, benchmark task construction, and the seeded
synthetic corpus generator.

The corpus is a JSONL flat file of (table signature, condition, format)
records with an in-memory header-token index. Benchmark tasks pair a table
with either a ground-truth rule or a manually-formatted column mask.
"""

from __future__ import annotations

import datetime as dt
import json
import logging
import random
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

from .dates import ANCHOR_TODAY, month_bounds, shift_month, shift_week, week_bounds
from .dsl.evaluate import Evaluator, ExecutionVector
from .dsl.jsonio import cond_from_json, cond_to_json
from .dsl.nodes import Condition, Literal, Predicate, Rule, print_condition, single
from .dsl.normalize import condition_constants, literal_sketches, normalize
from .generator.predicates import enumerate_predicates
from .profiler import extract_properties
from .table import (
    Format,
    Table,
    TargetColumn,
    parse_table,
    sidecar_from_table,
    table_to_csv,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CorpusRecord:
    """One stored rule: the table signature it came from, the condition, and
    the format the user chose."""

    id: str
    header_set: frozenset[str]
    formula_set: frozenset[str]
    condition: Condition
    predicate_sketch_set: frozenset[str]
    constant_set: frozenset[str]
    format: Format
    provenance: str

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "headers": sorted(self.header_set),
            "formulas": sorted(self.formula_set),
            "condition": cond_to_json(self.condition),
            "condition_text": print_condition(self.condition),
            "sketches": sorted(self.predicate_sketch_set),
            "constants": sorted(self.constant_set),
            "format": self.format.to_json(),
            "provenance": self.provenance,
        }


def make_record(
    record_id: str,
    table: Table,
    condition: Condition,
    fmt: Format,
    provenance: str,
) -> CorpusRecord:
    """Build a record from live objects; derived sets are computed here."""
    return CorpusRecord(
        id=record_id,
        header_set=frozenset(h.casefold() for h in table.headers),
        formula_set=frozenset(
            c.formula for col in table.columns for c in col if c.formula
        ),
        condition=normalize(condition),
        predicate_sketch_set=literal_sketches(condition),
        constant_set=condition_constants(condition),
        format=fmt,
        provenance=provenance,
    )


def record_from_json(doc: dict) -> CorpusRecord:
    """Parse a stored record. Derived sets are recomputed from the condition
    AST; stored sets that disagree raise ValueError."""
    record_id = doc.get("id")
    if not isinstance(record_id, str) or not record_id:
        raise ValueError("record id missing")
    condition = normalize(cond_from_json(doc["condition"]))
    sketches = literal_sketches(condition)
    constants = condition_constants(condition)
    if "sketches" in doc and frozenset(doc["sketches"]) != sketches:
        raise ValueError("stored sketches disagree with condition")
    if "constants" in doc and frozenset(doc["constants"]) != constants:
        raise ValueError("stored constants disagree with condition")
    return CorpusRecord(
        id=record_id,
        header_set=frozenset(str(h).casefold() for h in doc.get("headers", [])),
        formula_set=frozenset(str(f) for f in doc.get("formulas", [])),
        condition=condition,
        predicate_sketch_set=sketches,
        constant_set=constants,
        format=Format.from_json(doc.get("format", {})),
        provenance=str(doc.get("provenance", "unknown")),
    )


@dataclass
class IngestReport:
    accepted: int
    rejected: list[tuple[str, str]]

    def to_json(self) -> dict:
        return {
            "accepted": self.accepted,
            "rejected": [{"id": rid, "reason": why} for rid, why in self.rejected],
        }


class CorpusStore:
    """JSONL-backed record store with a header-token index.

    A store constructed without a path lives purely in memory; with a path,
    ingested records are appended to the file as they are accepted.
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self.records: list[CorpusRecord] = []
        self._by_id: dict[str, CorpusRecord] = {}
        self._header_index: dict[str, set[str]] = defaultdict(set)

    @classmethod
    def load(cls, path: str | Path) -> "CorpusStore":
        store = cls(path)
        p = Path(path)
        if p.exists():
            rows = []
            with open(p, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        rows.append(json.loads(line))
            store.ingest(rows, persist=False)
        return store

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def get(self, record_id: str) -> CorpusRecord | None:
        return self._by_id.get(record_id)

    def _index(self, record: CorpusRecord) -> None:
        self.records.append(record)
        self._by_id[record.id] = record
        for header in record.header_set:
            self._header_index[header].add(record.id)

    def add(self, record: CorpusRecord, persist: bool = True) -> None:
        """Insert one record built in-process (no validation round-trip)."""
        if record.id in self._by_id:
            raise ValueError(f"duplicate record id {record.id!r}")
        self._index(record)
        if persist and self.path is not None:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record.to_json(), sort_keys=True) + "\n")

    def ingest(self, rows, persist: bool = True) -> IngestReport:
        """Validate and store a stream of record documents. Bad rows are
        rejected with a reason; ingestion continues past them."""
        accepted = 0
        rejected: list[tuple[str, str]] = []
        for i, row in enumerate(rows):
            rid = row.get("id") if isinstance(row, dict) else None
            label = rid if isinstance(rid, str) and rid else f"row {i}"
            if not isinstance(row, dict):
                rejected.append((label, "json"))
                continue
            try:
                record = record_from_json(row)
            except (KeyError, TypeError, ValueError) as exc:
                rejected.append((label, f"parse: {exc}"))
                continue
            if record.id in self._by_id:
                rejected.append((record.id, "duplicate"))
                continue
            self.add(record, persist=persist)
            accepted += 1
        return IngestReport(accepted=accepted, rejected=rejected)

    def ids_with_header(self, header: str) -> set[str]:
        return set(self._header_index.get(header.casefold(), set()))


# --- benchmark tasks ----------------------------------------------------------

@dataclass(frozen=True)
class BenchmarkTask:
    """A table plus ground truth: either a planted rule or, for manually
    formatted sheets, just the highlight mask."""

    task_id: str
    table: Table
    target: TargetColumn
    mask: ExecutionVector
    rule: Rule | None = None
    today: dt.date | None = None

    @property
    def kind(self) -> str:
        return "rule" if self.rule is not None else "manual"


def make_manual_task(
    table: Table, col: TargetColumn, task_id: str = "manual"
) -> BenchmarkTask | None:
    """A column qualifies as a manual-formatting task only when its filled
    cell count c satisfies 5 < c < m: ubiquitous or near-empty formatting
    carries no recoverable intent."""
    cells = table.columns[col.index]
    bits = [cell.format.fill is not None for cell in cells]
    c = sum(bits)
    if not (5 < c < len(cells)):
        return None
    return BenchmarkTask(
        task_id=task_id,
        table=table,
        target=col,
        mask=ExecutionVector.from_bools(bits),
    )


# --- synthetic corpus ---------------------------------------------------------

_TEXT_HEADERS = ("Status", "Region", "Owner", "Category", "Dept", "Team",
                 "Stage", "Product", "Priority", "City")
_NUM_HEADERS = ("Budget", "Cost", "Qty", "Price", "Revenue", "Hours",
                "Score", "Units", "Total", "Amount")
_DATE_HEADERS = ("Due", "Created", "Shipped", "Updated", "Start", "Closed")

# Words inside each pool share no 1-3 character prefix or suffix, so the
# enumerated StartsWith/EndsWith predicates land on single-value row sets.
_TEXT_POOLS = (
    ("Complete", "Pending", "Blocked", "Draft"),
    ("Alpha", "Bravo", "Comet", "Dune", "Ember"),
    ("High", "Medium", "Low"),
    ("Apple", "Mango", "Kiwi", "Plum"),
    ("Iron", "Copper", "Zinc", "Gold", "Brass"),
    ("Monday", "Tuesday", "Friday", "Sunday"),
)

_PALETTE = (
    Format(fill=(255, 0, 0)),
    Format(fill=(255, 255, 0)),
    Format(fill=(152, 251, 152)),
    Format(fill=(173, 216, 230)),
    Format(fill=(255, 165, 0)),
    Format(fill=(255, 192, 203), bold=True),
    Format(fill=(211, 211, 211), font=(178, 34, 34)),
)


def _sample_text_column(rng: random.Random, m: int) -> list[str]:
    # Skewed draw weights: only the first few pool words pass 10% of rows,
    # so a column offers a handful of plausible value rules, not a dozen.
    pool = rng.choice(_TEXT_POOLS)
    weights = [1.0, 0.55, 0.3, 0.15, 0.1, 0.08][: len(pool)]
    values = rng.choices(pool, weights=weights, k=m)
    if rng.random() < 0.15:
        for _ in range(max(1, m // 15)):
            values[rng.randrange(m)] = ""
    return values


def _sample_numeric_column(rng: random.Random, m: int) -> list[str]:
    # A handful of repeated integer levels, the way quantities and ratings
    # look in real sheets. Few distinct values keep thresholds meaningful.
    base = rng.choice((1, 10, 100, 1000))
    n_levels = rng.choices((2, 3, 4), weights=(3, 4, 2))[0]
    levels = rng.sample((1, 2, 3, 5, 8, 12, 20, 35, 50, 80), n_levels)
    pool = [lv * base for lv in levels]
    return [str(rng.choice(pool)) for _ in range(m)]


def _sample_date_column(rng: random.Random, m: int) -> list[str]:
    values = []
    mode = rng.random()
    if mode < 0.55:
        # Two-year spread: the year split is the signal, windows stay rare.
        minority = rng.uniform(0.18, 0.5)
        years = (ANCHOR_TODAY.year - 1, ANCHOR_TODAY.year)
        for _ in range(m):
            year = years[0] if rng.random() < minority else years[1]
            day = dt.date(year, 1, 1) + dt.timedelta(days=rng.randrange(363))
            values.append(day.isoformat())
        return values
    if mode < 0.70:
        # One hot week near the anchor, rest of the year as noise.
        weeks = [shift_week(ANCHOR_TODAY, d) for d in (-1, 0, 1)]
        hot = rng.randrange(3)
        w = rng.uniform(0.18, 0.4)
        for _ in range(m):
            if rng.random() < w:
                first, _last = week_bounds(weeks[hot])
                day = first + dt.timedelta(days=rng.randrange(7))
            else:
                day = dt.date(ANCHOR_TODAY.year, 1, 1) + dt.timedelta(
                    days=rng.randrange(363)
                )
            values.append(day.isoformat())
        return values
    # Single-year column massed on one month near the anchor so exactly one
    # window stands out; the other two get a trickle that usually stays
    # below the plantable band. Which month is hot rotates, so last, this
    # and next month rules all occur as ground truth.
    months = [shift_month(ANCHOR_TODAY, d) for d in (-1, 0, 1)]
    hot = rng.randrange(3)
    weights = [rng.uniform(0.02, 0.07) for _ in months]
    weights[hot] = rng.uniform(0.18, 0.45)
    weights.append(max(0.1, 1.0 - sum(weights)))
    for _ in range(m):
        bucket = rng.choices(range(4), weights=weights)[0]
        if bucket < 3:
            first, last = month_bounds(months[bucket])
            day = first + dt.timedelta(days=rng.randrange((last - first).days + 1))
        else:
            year = ANCHOR_TODAY.year
            day = dt.date(year, 1, 1) + dt.timedelta(days=rng.randrange(363))
        values.append(day.isoformat())
    return values


def _sample_table(rng: random.Random, target_type: str) -> tuple[Table, int]:
    m = rng.randint(16, 40)
    n_cols = rng.randint(3, 5)
    target_pos = rng.randrange(n_cols)
    samplers = {
        "text": (_sample_text_column, list(_TEXT_HEADERS)),
        "numeric": (_sample_numeric_column, list(_NUM_HEADERS)),
        "date": (_sample_date_column, list(_DATE_HEADERS)),
    }
    used: set[str] = set()
    headers: list[str] = []
    columns: list[list[str]] = []
    for pos in range(n_cols):
        ctype = target_type if pos == target_pos else rng.choice(
            ("text", "text", "numeric", "numeric", "date")
        )
        sampler, pool = samplers[ctype]
        name = rng.choice([h for h in pool if h not in used] or pool)
        used.add(name)
        headers.append(name)
        columns.append(sampler(rng, m))
    csv_lines = [",".join(headers)]
    for r in range(m):
        csv_lines.append(",".join(f'"{col[r]}"' for col in columns))
    table = parse_table("\n".join(csv_lines) + "\n")
    return table, target_pos


def _depth2_conditions(preds: list[Predicate]):
    """Exhaustive depth-2 space: single literals and all two-literal
    conjunctions/disjunctions (negations only where the sampler plants them)."""
    singles = [single(p) for p in preds]
    yield from singles
    for i in range(len(preds)):
        for j in range(i + 1, len(preds)):
            a, b = Literal(preds[i]), Literal(preds[j])
            yield Condition(((a, b),))
            yield Condition(((a,), (b,)))


def _synthesizable(
    truth: Condition, preds: list[Predicate], evaluator: Evaluator
) -> bool:
    want = evaluator.execute(truth)
    for cand in _depth2_conditions(preds):
        try:
            if evaluator.execute(cand) == want:
                return True
        except ValueError:
            continue
    return False


def _sample_condition(
    rng: random.Random, preds: list[Predicate], evaluator: Evaluator, m: int
) -> Condition | None:
    """Draw a depth-2 condition over the enumerated predicates whose
    highlight fraction lands in the 10-60 percent band."""
    if not preds:
        return None

    def frac_of(c: Condition) -> float | None:
        try:
            return evaluator.execute(c).popcount / m
        except ValueError:
            return None

    # Aim at a uniform spot in the band, relaxing as attempts burn down, so
    # planted fractions cover the whole band instead of massing at the low
    # end where most enumerated predicates live; an extra helping of
    # high-fraction targets keeps the top of the band populated, since few
    # enumerated predicates reach it. Plants keep a small margin inside the
    # documented 10-60 band: a rule at the exact boundary is statistically
    # ambiguous against its own complement.
    if rng.random() < 0.7:
        want = rng.uniform(0.12, 0.57)
    else:
        want = rng.uniform(0.40, 0.57)
    for attempt in range(60):
        r = rng.random()
        if r < 0.85 or len(preds) < 2:
            cond = single(rng.choice(preds))
        else:
            a, b = rng.sample(preds, 2)
            # Pairs must have beam-visible prefixes: both halves matching
            # something, neither matching nearly everything.
            fa, fb = frac_of(single(a)), frac_of(single(b))
            if fa is None or fb is None:
                continue
            if not (0.05 <= fa <= 0.7 and 0.05 <= fb <= 0.7):
                continue
            if r < 0.95:
                cond = Condition(((Literal(a), Literal(b)),))
            else:
                cond = Condition(((Literal(a),), (Literal(b),)))
        frac = frac_of(cond)
        if frac is None or not (0.12 <= frac <= 0.57):
            continue
        if abs(frac - want) <= 0.05 + attempt * 0.02:
            return cond
    return None


def generate_synthetic_corpus(
    seed: int, n_tasks: int
) -> tuple[list[BenchmarkTask], list[CorpusRecord]]:
    """Seeded generator of matched (table, rule, format) benchmark tasks.

    Every planted rule is built from the table's own enumerated predicates
    and double-checked against the exhaustive depth-2 enumerator, so the
    symbolic generator can always re-derive it.
    """
    if n_tasks < 1:
        raise ValueError("n_tasks must be at least 1")
    rng = random.Random(seed)
    tasks: list[BenchmarkTask] = []
    records: list[CorpusRecord] = []
    i = 0
    while len(tasks) < n_tasks:
        target_type = rng.choices(
            ("text", "numeric", "date"), weights=(0.45, 0.35, 0.2)
        )[0]
        cond = None
        for _ in range(10):
            table, target_pos = _sample_table(rng, target_type)
            target = TargetColumn(target_pos)
            props = extract_properties(table, target, today=ANCHOR_TODAY)
            preds = enumerate_predicates(props, table, target)
            evaluator = Evaluator(table, target=target_pos, today=ANCHOR_TODAY)
            cond = _sample_condition(rng, preds, evaluator, table.n_rows)
            if cond is not None and _synthesizable(cond, preds, evaluator):
                break
            cond = None
        task_id = f"synth-{seed}-{i:04d}"
        i += 1
        if cond is None:
            log.warning("skipping task %s: no in-band rule found", task_id)
            continue
        fmt = rng.choice(_PALETTE)
        mask = evaluator.execute(cond)
        tasks.append(
            BenchmarkTask(
                task_id=task_id,
                table=table,
                target=target,
                mask=mask,
                rule=Rule(cond, fmt),
                today=ANCHOR_TODAY,
            )
        )
        records.append(make_record(task_id, table, cond, fmt, "synthetic"))
    return tasks, records


# --- benchmark directory layout -----------------------------------------------

def write_benchmark_dir(tasks: list[BenchmarkTask], root: str | Path) -> None:
    """One folder per task: table.csv, sidecar.json, truth.json."""
    base = Path(root)
    base.mkdir(parents=True, exist_ok=True)
    for task in tasks:
        folder = base / task.task_id
        folder.mkdir(exist_ok=True)
        (folder / "table.csv").write_text(table_to_csv(task.table), encoding="utf-8")
        sidecar = sidecar_from_table(task.table)
        (folder / "sidecar.json").write_text(
            json.dumps(sidecar, sort_keys=True), encoding="utf-8"
        )
        truth: dict = {
            "kind": task.kind,
            "target": task.table.headers[task.target.index],
            "mask": task.mask.to_base64(),
            "length": task.mask.length,
        }
        if task.rule is not None:
            truth["condition"] = cond_to_json(task.rule.condition)
            truth["condition_text"] = print_condition(task.rule.condition)
            truth["format"] = task.rule.format.to_json()
        if task.today is not None:
            truth["today"] = task.today.isoformat()
        (folder / "truth.json").write_text(
            json.dumps(truth, sort_keys=True), encoding="utf-8"
        )


def load_benchmark_dir(root: str | Path) -> list[BenchmarkTask]:
    base = Path(root)
    tasks = []
    for folder in sorted(p for p in base.iterdir() if p.is_dir()):
        csv_text = (folder / "table.csv").read_text(encoding="utf-8")
        sidecar = json.loads((folder / "sidecar.json").read_text(encoding="utf-8"))
        truth = json.loads((folder / "truth.json").read_text(encoding="utf-8"))
        table = parse_table(csv_text, sidecar)
        target_idx = table.column_index(truth["target"])
        if target_idx is None:
            raise ValueError(f"{folder.name}: target column not in table")
        rule = None
        if truth["kind"] == "rule":
            rule = Rule(
                cond_from_json(truth["condition"]),
                Format.from_json(truth.get("format", {})),
            )
        today = dt.date.fromisoformat(truth["today"]) if "today" in truth else None
        tasks.append(
            BenchmarkTask(
                task_id=folder.name,
                table=table,
                target=TargetColumn(target_idx),
                mask=ExecutionVector.from_base64(truth["mask"], truth["length"]),
                rule=rule,
                today=today,
            )
        )
    return tasks
