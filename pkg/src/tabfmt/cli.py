"""Command-line entry points for the full engine lifecycle.

Subcommands: suggest (one table, one column, ranked rules on stdout), eval
(benchmark directory to report.json/report.csv), train-ranker (fit and save
a scorer), ingest (validate records into a corpus store), gen-corpus (seeded
synthetic benchmark), serve (HTTP service).

Exit codes: 0 success, 2 input error (missing or malformed files/flags),
3 resolution error (names that do not resolve against the data), 4 internal
error. Diagnostics go to stderr; primary output goes to stdout or files.
With fixed seeds and --no-llm every primary output is bit-reproducible.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import os
import sys
from pathlib import Path

from .corpus import (
    CorpusStore,
    generate_synthetic_corpus,
    load_benchmark_dir,
    write_benchmark_dir,
)
from .dsl import ConditionParseError
from .evalharness import run_suite, write_report
from .generator import train_ranker
from .llm import LiveClient, MockClient, TranscriptClient
from .pipeline import suggest
from .table import TableParseError, TargetColumn, parse_table

log = logging.getLogger(__name__)

OK, INPUT_ERROR, RESOLUTION_ERROR, INTERNAL_ERROR = 0, 2, 3, 4


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _read_text(path: str) -> str:
    # surfaces a uniform message for missing/unreadable input files
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"file not found: {path}")
    return p.read_text(encoding="utf-8")


def _pick_client(args) -> object | None:
    """Generator client per flags: --no-llm wins, then --transcript replay,
    then a live endpoint if the environment configures one, else the offline
    deterministic mock."""
    if getattr(args, "no_llm", False):
        return None
    transcript = getattr(args, "transcript", None)
    if transcript:
        return TranscriptClient(transcript)
    if os.environ.get("TABFMT_LLM_ENDPOINT"):
        return LiveClient()
    return MockClient()


def _parse_today(value: str | None) -> dt.date | None:
    if value is None:
        return None
    return dt.date.fromisoformat(value)


def _resolve_column(table, name: str) -> TargetColumn:
    idx = table.column_index(name)
    if idx is None:
        if name.isdigit() and 0 <= int(name) < len(table.headers):
            return TargetColumn(int(name))
        raise LookupError(
            f"column {name!r} not in table (have: {', '.join(table.headers)})"
        )
    return TargetColumn(idx)


def _format_text(fmt) -> str:
    parts = []
    if fmt.fill is not None:
        parts.append(f"fill #{fmt.fill[0]:02X}{fmt.fill[1]:02X}{fmt.fill[2]:02X}")
    if fmt.font is not None:
        parts.append(f"font #{fmt.font[0]:02X}{fmt.font[1]:02X}{fmt.font[2]:02X}")
    for name in ("bold", "italic", "underline"):
        if getattr(fmt, name):
            parts.append(name)
    return ", ".join(parts) if parts else "(no format)"


def cmd_suggest(args) -> int:
    try:
        csv_text = _read_text(args.table)
        sidecar = json.loads(_read_text(args.sidecar)) if args.sidecar else None
        table = parse_table(csv_text, sidecar)
        today = _parse_today(args.today)
    except (OSError, json.JSONDecodeError, TableParseError, ValueError) as exc:
        _err(str(exc))
        return INPUT_ERROR
    try:
        col = _resolve_column(table, args.column)
    except LookupError as exc:
        _err(str(exc))
        return RESOLUTION_ERROR
    try:
        client = _pick_client(args)
    except OSError as exc:
        _err(f"transcript: {exc}")
        return INPUT_ERROR
    result = suggest(table, col, k=args.k, client=client, seed=args.seed, today=today)
    if args.format == "json":
        print(json.dumps(result.to_json(), indent=2))
    else:
        for w in result.warnings:
            print(f"warning: {w}", file=sys.stderr)
        for i, s in enumerate(result.suggestions, start=1):
            print(f"{i}. {s.rule_text}")
            print(f"   {_format_text(s.format)}; highlights "
                  f"{s.vector.popcount} of {s.vector.length} rows")
    return OK


def cmd_eval(args) -> int:
    try:
        k_values = tuple(int(p) for p in args.k.split(",") if p.strip())
        if not k_values or any(k < 1 for k in k_values):
            raise ValueError(f"bad --k {args.k!r}: want comma-separated positive ints")
        tasks = load_benchmark_dir(args.bench)
        if not tasks:
            raise ValueError(f"no tasks found under {args.bench}")
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        _err(str(exc))
        return INPUT_ERROR
    client = _pick_client(args)
    report = run_suite(tasks, k_values=k_values, client=client, seed=args.seed)
    json_path, csv_path = write_report(report, args.out)
    for k in k_values:
        rates = report.match_rates[k]
        print(f"top-{k}: " + "  ".join(f"{m}={rates[m]:.3f}" for m in
                                       ("exact", "sketch", "execution", "end_to_end")))
    print(f"wrote {json_path} and {csv_path}", file=sys.stderr)
    return OK


def cmd_train_ranker(args) -> int:
    try:
        tasks = load_benchmark_dir(args.corpus)
        triples = [
            (t.table, t.target, t.rule.condition) for t in tasks if t.rule is not None
        ]
        if not triples:
            raise ValueError(f"no rule tasks under {args.corpus}")
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        _err(str(exc))
        return INPUT_ERROR
    today = next((t.today for t in tasks if t.today is not None), None)
    try:
        model = train_ranker(
            triples, seed=args.seed, epochs=args.epochs, today=today
        )
    except ValueError as exc:
        _err(str(exc))
        return INPUT_ERROR
    model.save(args.out)
    print(f"trained on {len(triples)} rules; model written to {args.out}",
          file=sys.stderr)
    return OK


def cmd_ingest(args) -> int:
    try:
        lines = _read_text(args.infile).splitlines()
        rows = [json.loads(line) for line in lines if line.strip()]
    except (OSError, json.JSONDecodeError) as exc:
        _err(str(exc))
        return INPUT_ERROR
    store = CorpusStore(args.store)
    report = store.ingest(rows)
    print(json.dumps(report.to_json(), indent=2))
    return OK


def cmd_gen_corpus(args) -> int:
    if args.n < 1:
        _err("--n must be at least 1")
        return INPUT_ERROR
    tasks, records = generate_synthetic_corpus(args.seed, args.n)
    out = Path(args.out)
    write_benchmark_dir(tasks, out)
    with (out / "records.jsonl").open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_json(), sort_keys=True) + "\n")
    print(f"wrote {len(tasks)} tasks and {len(records)} records under {out}",
          file=sys.stderr)
    return OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    corpus = CorpusStore(args.store) if args.store else None
    uvicorn.run(create_app(client=_pick_client(args), corpus=corpus),
                host=args.host, port=args.port)
    return OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tabfmt",
        description="Predictive conditional-formatting suggestions for tables",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("suggest", help="rank format rules for one column")
    p.add_argument("--table", required=True, help="CSV file, first row is headers")
    p.add_argument("--sidecar", help="JSON file with existing cell formats")
    p.add_argument("--column", required=True, help="target column header (or 0-based index)")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--no-llm", action="store_true", help="symbolic generators only")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--today", help="reference date for calendar predicates (YYYY-MM-DD)")
    p.add_argument("--transcript", help="JSONL of recorded generator responses to replay")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.set_defaults(func=cmd_suggest)

    p = sub.add_parser("eval", help="run a benchmark directory, write reports")
    p.add_argument("--bench", required=True, help="directory from gen-corpus")
    p.add_argument("--k", default="1,3,5", help="comma-separated cutoffs")
    p.add_argument("--no-llm", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".", help="directory for report.json/report.csv")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("train-ranker", help="fit the candidate scorer")
    p.add_argument("--corpus", required=True, help="benchmark directory of rule tasks")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=300)
    p.set_defaults(func=cmd_train_ranker)

    p = sub.add_parser("ingest", help="validate record JSONL into a corpus store")
    p.add_argument("--in", dest="infile", required=True, help="records JSONL")
    p.add_argument("--store", default="corpus_store.jsonl",
                   help="store file to append accepted records to")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("gen-corpus", help="seeded synthetic benchmark")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--out", required=True, help="benchmark directory to create")
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--no-llm", action="store_true")
    p.add_argument("--transcript")
    p.add_argument("--store", help="corpus store JSONL for format retrieval")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConditionParseError as exc:
        _err(str(exc))
        return INPUT_ERROR
    except KeyboardInterrupt:
        return INTERNAL_ERROR
    except Exception as exc:  # last-resort guard so scripts see exit 4, not a traceback
        log.exception("internal error")
        _err(f"internal: {exc}")
        return INTERNAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
