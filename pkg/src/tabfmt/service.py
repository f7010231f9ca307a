"""HTTP facade over the suggestion pipeline.

In-memory, desk-scale session service: upload a table, ask for ranked rule
suggestions with highlight masks, apply a rule to get a new immutable
revision, and read any revision back as canonical table JSON. Suggestions
computed on a revision see the formats applied by earlier rules, which is
how applied formatting biases what gets suggested next.
"""

from __future__ import annotations

import datetime as dt
import logging
import threading
import uuid

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .corpus import CorpusStore
from .dsl import (
    ConditionParseError,
    Rule,
    TypeMismatchError,
    UnknownColumnError,
    Evaluator,
    parse_condition,
)
from .llm import MockClient
from .pipeline import suggest
from .table import (
    Format,
    Table,
    TableParseError,
    TargetColumn,
    apply_rule,
    parse_table,
    table_to_json,
)

log = logging.getLogger(__name__)


class TableUploadRequest(BaseModel):
    csv: str
    sidecar: dict | None = None


class SuggestRequest(BaseModel):
    table_id: str
    column: str | int
    k: int = 5
    use_llm: bool = False
    seed: int = 0
    # ISO date anchoring calendar-window predicates; defaults to the real today
    today: str | None = None


class RuleSpec(BaseModel):
    column: str | int
    condition: str
    format: dict


class ApplyRequest(BaseModel):
    table_id: str
    rule: RuleSpec
    today: str | None = None


class SessionTable:
    """One uploaded table and its immutable revision chain.

    Revision 0 is the upload; every apply appends exactly one new Table.
    Applies are serialized per table; reads take a snapshot of the list tail
    and never block.
    """

    def __init__(self, table_id: str, table: Table):
        self.table_id = table_id
        self.revisions: list[Table] = [table]
        self.lock = threading.Lock()

    @property
    def revision(self) -> int:
        return len(self.revisions) - 1

    @property
    def current(self) -> Table:
        return self.revisions[-1]


def _parse_today(value: str | None) -> dt.date | None:
    if value is None:
        return None
    try:
        return dt.date.fromisoformat(value)
    except ValueError:
        raise HTTPException(422, detail=f"invalid today (want YYYY-MM-DD): {value!r}")


def _resolve_column(table: Table, column: str | int) -> TargetColumn:
    if isinstance(column, int):
        if not (0 <= column < len(table.headers)):
            raise HTTPException(
                422, detail=f"column index {column} out of range 0..{len(table.headers) - 1}"
            )
        return TargetColumn(column)
    idx = table.column_index(column)
    if idx is None:
        raise HTTPException(422, detail=f"unknown column {column!r}")
    return TargetColumn(idx)


def create_app(
    client=None,
    corpus: CorpusStore | None = None,
) -> FastAPI:
    """Build the service.

    `client` is the generator used when a request sets use_llm; the default
    MockClient is an offline deterministic stand-in, so the service never
    needs network access unless one is injected. `corpus` grounds format
    retrieval; None means formats come from the sheet and the fallback
    palette only.
    """
    app = FastAPI(title="conditional formatting suggestion service")
    llm_client = client if client is not None else MockClient()
    tables: dict[str, SessionTable] = {}
    tables_lock = threading.Lock()

    def _get_session(table_id: str) -> SessionTable:
        session = tables.get(table_id)
        if session is None:
            raise HTTPException(404, detail=f"unknown table {table_id!r}")
        return session

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "tables": len(tables)}

    @app.post("/tables")
    def upload_table(req: TableUploadRequest) -> dict:
        try:
            table = parse_table(req.csv, sidecar=req.sidecar)
        except TableParseError as exc:
            raise HTTPException(400, detail=str(exc))
        table_id = f"t-{uuid.uuid4().hex[:12]}"
        with tables_lock:
            tables[table_id] = SessionTable(table_id, table)
        return {
            "table_id": table_id,
            "headers": list(table.headers),
            "types": [t.value for t in table.types],
            "n_rows": table.n_rows,
        }

    @app.post("/suggest")
    def suggest_rules(req: SuggestRequest):
        session = _get_session(req.table_id)
        table = session.current
        revision = session.revision
        col = _resolve_column(table, req.column)
        if req.k < 1:
            raise HTTPException(422, detail="k must be at least 1")
        today = _parse_today(req.today)
        result = suggest(
            table,
            col,
            k=req.k,
            client=llm_client if req.use_llm else None,
            corpus=corpus,
            seed=req.seed,
            today=today,
        )
        payload = {
            "table_id": req.table_id,
            "revision": revision,
            **result.to_json(),
        }
        if req.use_llm and result.llm_fallback:
            # The pipeline already downgraded to symbolic-only; surface the
            # degradation as 503 but keep the usable suggestions in the body.
            return JSONResponse(status_code=503, content=payload)
        return payload

    @app.post("/apply")
    def apply(req: ApplyRequest) -> dict:
        session = _get_session(req.table_id)
        today = _parse_today(req.today)
        try:
            cond = parse_condition(req.rule.condition)
        except ConditionParseError as exc:
            raise HTTPException(
                422, detail=f"rule does not parse at position {exc.pos}: {exc}"
            )
        try:
            fmt = Format.from_json(req.rule.format)
        except (ValueError, KeyError, TypeError) as exc:
            raise HTTPException(422, detail=f"bad format: {exc}")
        with session.lock:
            table = session.current
            col = _resolve_column(table, req.rule.column)
            try:
                Evaluator(table, target=col.index, today=today).validate(cond)
            except (UnknownColumnError, TypeMismatchError) as exc:
                raise HTTPException(422, detail=str(exc))
            new_table = apply_rule(table, col, Rule(cond, fmt), today=today)
            session.revisions.append(new_table)
            revision = session.revision
        return {"table_id": req.table_id, "revision": revision}

    @app.get("/tables/{table_id}/revisions/{revision}")
    def get_revision(table_id: str, revision: int) -> dict:
        session = _get_session(table_id)
        if not (0 <= revision < len(session.revisions)):
            raise HTTPException(
                404, detail=f"table {table_id!r} has no revision {revision}"
            )
        return {
            "table_id": table_id,
            "revision": revision,
            "table": table_to_json(session.revisions[revision]),
        }

    return app


app = create_app()
