"""Regenerate the shipped scorer asset (src/tabfmt/assets/default_ranker.json).

Recipe:
  base corpus   generate_synthetic_corpus(seed=11, n_tasks=800)
  training set  rule triples from tasks[:680] plus cross-column arithmetic
                triples (the enumerator never emits those, so without them the
                scorer has no opinion on the rules the text generator
                contributes)
  held-out set  tasks[680:], scored as recall@5 of the symbolic pipeline with
                the candidate model plugged in
  selection     three training seeds; keep the best held-out recall among the
                models that also pass the transcript-boost gate below

Gates checked per candidate:
  * boosted transcript scenario: on the project fixture table, the rule
    [@Budget]-[@Cost]>1000 must reach the top 5 suggestions when its terms
    arrive via a recorded transcript, and must not appear without one
  * fraction sanity: a full-column highlight scores below an otherwise
    identical 40% highlight

Run from the repository root:  python3 tools/train_default_ranker.py
"""

from __future__ import annotations

import json
import random
import sys
import tempfile
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from tabfmt.corpus import _sample_table, generate_synthetic_corpus
from tabfmt.dates import ANCHOR_TODAY
from tabfmt.dsl import Evaluator, normalize, parse_condition
from tabfmt.dsl.nodes import Cmp, ColumnRef, Condition, Const, Literal, Sub
from tabfmt.generator import train_ranker
from tabfmt.llm import TranscriptClient, build_prompt
from tabfmt.pipeline import suggest
from tabfmt.profiler import extract_properties
from tabfmt.table import CellType, TargetColumn, parse_table

ASSET = Path(__file__).resolve().parent.parent / "src" / "tabfmt" / "assets" / "default_ranker.json"

BASE_SEED = 11
N_TASKS = 800
TRAIN_CUT = 680
ARITH_SEED = 4242
N_ARITH = 160
EPOCHS = 1000
TRAIN_SEEDS = (0, 1, 2)

FIXTURE_CSV = (
    "Project ID,Status,Budget,Cost\n"
    "P-001,Complete,12000,9500\n"
    "P-002,Pending,8000,9200\n"
    "P-003,Complete,15000,11000\n"
    "P-004,Blocked,7000,7100\n"
    "P-005,Pending,9000,4000\n"
    "P-006,Complete,20000,18500\n"
    "P-007,Draft,5000,200\n"
    "P-008,Blocked,11000,12400\n"
)
FIXTURE_RESPONSE = "\n".join([
    "Step 1 - relevant columns:",
    "- Budget",
    "- Cost",
    "Step 2 - predicates and functions:",
    "- Cmp",
    "Step 3 - constants:",
    "- 1000",
    "Step 4 - rules:",
    "- [@Budget]-[@Cost]>1000",
]) + "\n"


def arithmetic_triples(seed: int, n: int):
    """Planted cross-column comparison rules with in-band highlight
    fractions, over the same table sampler the benchmark uses. Wider band
    than the benchmark (up to 0.70): these model text-generator output, not
    symbolic plants."""
    rng = random.Random(seed)
    out = []
    while len(out) < n:
        target_type = rng.choice(("text", "text", "numeric", "date"))
        table, target_pos = _sample_table(rng, target_type)
        numeric = [i for i, t in enumerate(table.types) if t is CellType.NUMERIC]
        if len(numeric) < 2:
            continue
        a, b = rng.sample(numeric, 2)
        ra, rb = ColumnRef(table.headers[a]), ColumnRef(table.headers[b])
        diffs = sorted(
            x.parsed - y.parsed
            for x, y in zip(table.columns[a], table.columns[b])
            if isinstance(x.parsed, float) and isinstance(y.parsed, float)
        )
        if not diffs:
            continue
        ev = Evaluator(table, target=target_pos, today=ANCHOR_TODAY)
        for _ in range(12):
            op = rng.choice((">", ">=", "<", "<="))
            if rng.random() < 0.3:
                pred = Cmp(ra, op, rb)
            else:
                q = rng.uniform(0.15, 0.85)
                c = diffs[min(int(q * len(diffs)), len(diffs) - 1)]
                c = float(round(c + rng.uniform(-1, 1)))
                pred = Cmp(Sub(ra, rb), op, Const(c))
            cond = Condition(((Literal(pred),),))
            frac = ev.fraction(cond)
            if 0.10 <= frac <= 0.70:
                out.append((table, TargetColumn(target_pos), cond))
                break
    return out


def fixture_gate(model) -> tuple[bool, str]:
    table = parse_table(FIXTURE_CSV)
    col = TargetColumn(0)
    props = extract_properties(table, col, today=ANCHOR_TODAY)
    prompt = build_prompt(table, col, props, seed=0)
    target = normalize(parse_condition("[@Budget]-[@Cost]>1000"))
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "transcript.jsonl"
        TranscriptClient.record(path, prompt, FIXTURE_RESPONSE)
        boosted = suggest(
            table, col, k=5, client=TranscriptClient(path), ranker=model,
            seed=0, today=ANCHOR_TODAY,
        )
    plain = suggest(table, col, k=5, client=None, ranker=model,
                    seed=0, today=ANCHOR_TODAY)
    present = any(normalize(s.condition) == target for s in boosted.suggestions)
    absent = not any(normalize(s.condition) == target for s in plain.suggestions)
    return present and absent, f"present={present} absent={absent}"


def fraction_gate(model) -> tuple[bool, str]:
    rows = "\n".join(str(v) for v in (1, 2, 3, 4, 5, 6, 7, 8, 9, 10))
    table = parse_table(f"Amount\n{rows}\n")
    col = TargetColumn(0)
    full = parse_condition("[@Amount]>=0")
    part = parse_condition("[@Amount]>=7")  # 4 of 10 rows
    from tabfmt.generator.ranker import score_node

    s_full = score_node(full, table, col, model, today=ANCHOR_TODAY)
    s_part = score_node(part, table, col, model, today=ANCHOR_TODAY)
    return s_part > s_full, f"40%={s_part:.2f} 100%={s_full:.2f}"


def heldout_recall(model, tasks) -> float:
    hits = 0
    for task in tasks:
        res = suggest(task.table, task.target, k=5, client=None,
                      ranker=model, today=task.today)
        hits += any(s.vector == task.mask for s in res.suggestions)
    return hits / len(tasks)


def main() -> int:
    print(f"sampling base corpus seed={BASE_SEED} n={N_TASKS} ...")
    tasks, _ = generate_synthetic_corpus(BASE_SEED, N_TASKS)
    base = [(t.table, t.target, t.rule.condition) for t in tasks[:TRAIN_CUT]]
    held = tasks[TRAIN_CUT:]
    arith = arithmetic_triples(ARITH_SEED, N_ARITH)
    print(f"training triples: {len(base)} base + {len(arith)} arithmetic")

    best = None
    for seed in TRAIN_SEEDS:
        t0 = time.perf_counter()
        model = train_ranker(base + arith, seed=seed, epochs=EPOCHS)
        dt_train = time.perf_counter() - t0
        ok_fix, why_fix = fixture_gate(model)
        ok_frac, why_frac = fraction_gate(model)
        recall = heldout_recall(model, held)
        print(
            f"seed {seed}: recall@5={recall:.3f} fixture[{why_fix}] "
            f"fraction[{why_frac}] ({dt_train:.0f}s)"
        )
        if ok_fix and ok_frac and (best is None or recall > best[0]):
            best = (recall, seed, model)

    if best is None:
        print("no candidate passed both gates; asset unchanged", file=sys.stderr)
        return 1

    recall, seed, model = best
    model.save(ASSET)
    print(f"wrote {ASSET} (seed {seed}, held-out recall@5 {recall:.3f})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
