"""HTTP service over the engine.

All reasoning state lives in an in-memory registry of immutable KB snapshots;
persistence is the user's KB file.  Move ids embed the snapshot version they
were computed against, so a stale apply is detected with 410.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from . import syntax
from .analysis import TBoxKind
from .context import KBContext
from .dimensions import drill_down, roll_up
from .errors import (InconsistentKBError, NoApplicableChainError,
                     NotADimensionVariableError, RecursiveTBoxError,
                     StaleMoveError, UnboundedOrUnknownError,
                     UnsupportedFragmentError)
from .queries import Variable
from .reformulate import RuleInstance, relax_moves, restrain_moves


@dataclass
class Session:
    kb_id: str
    context: KBContext


class Registry:
    def __init__(self):
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}
        self._counter = itertools.count(1)

    def load(self, kb_text: str) -> tuple[str, tuple]:
        doc = syntax.parse_kb(kb_text)
        if not doc.ok:
            return "", doc.diagnostics
        with self._lock:
            version = next(self._counter)
            kb_id = f"kb{version}"
            context = KBContext(doc.tbox, doc.abox, doc.constraints,
                                version=version)
            self._sessions[kb_id] = Session(kb_id, context)
        return kb_id, ()

    def get(self, kb_id: str) -> Session:
        session = self._sessions.get(kb_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown kb '{kb_id}'")
        return session


class KBRequest(BaseModel):
    kb_text: str


class AnswersRequest(BaseModel):
    query: str
    k: int | None = None
    method: str = "auto"


class MovesRequest(BaseModel):
    query: str
    direction: str
    data_driven: bool = False


class ApplyRequest(BaseModel):
    query: str
    move_id: str


class NavigateRequest(BaseModel):
    query: str
    var: str
    direction: str


def _diagnostics_error(diagnostics) -> HTTPException:
    return HTTPException(status_code=400, detail={
        "diagnostics": [{"message": d.message,
                         "line": d.span.line, "col": d.span.col,
                         "end_line": d.span.end_line, "end_col": d.span.end_col}
                        for d in diagnostics]})


def _parse_query_or_400(text: str):
    doc = syntax.parse_query(text)
    if not doc.ok:
        raise _diagnostics_error(doc.diagnostics)
    return doc.query


def _guarded(fn):
    try:
        return fn()
    except InconsistentKBError as exc:
        detail = {"error": "inconsistent knowledge base"}
        if exc.axiom is not None:
            detail["axiom"] = str(exc.axiom)
        if exc.witness:
            detail["witness"] = list(exc.witness)
        raise HTTPException(status_code=409, detail=detail)
    except (UnsupportedFragmentError, RecursiveTBoxError,
            UnboundedOrUnknownError) as exc:
        raise HTTPException(status_code=422, detail={"error": str(exc)})
    except StaleMoveError as exc:
        raise HTTPException(status_code=410, detail={"error": str(exc)})
    except (NotADimensionVariableError, NoApplicableChainError, ValueError) as exc:
        raise HTTPException(status_code=400, detail={"error": str(exc)})


def _summary(session: Session) -> dict:
    ctx = session.context
    cls = ctx.classification
    consistent = None
    try:
        consistent = bool(ctx.consistency)
    except UnsupportedFragmentError:
        pass
    admissible = None
    covers_ok = None
    if ctx.constraints and cls.kind is TBoxKind.RECURSION_SAFE and consistent:
        covers_ok = ctx.covers_report.covers
        admissible = ctx.admissibility.admissible
    return {
        "kb_id": session.kb_id,
        "class": cls.kind.value,
        "consistent": consistent,
        "admissibility": {"covers": covers_ok, "admissible": admissible},
        "ell": ctx.ell_value,
    }


def _move_payload(move: RuleInstance, version: int) -> dict:
    return {
        "id": f"v{version}:{move.move_id}",
        "rule": move.rule_id,
        "direction": move.direction,
        "data_driven": move.data_driven,
        "description": move.describe(),
        "result_query": syntax.query_text(move.result),
    }


def create_app() -> FastAPI:
    app = FastAPI(title="obdax", version="0.1.0")
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    registry = Registry()
    app.state.registry = registry

    @app.post("/api/kb")
    def load_kb(request: KBRequest):
        kb_id, diagnostics = registry.load(request.kb_text)
        if diagnostics:
            raise _diagnostics_error(diagnostics)
        return _guarded(lambda: _summary(registry.get(kb_id)))

    @app.get("/api/kb/{kb_id}/summary")
    def summary(kb_id: str):
        session = registry.get(kb_id)
        return _guarded(lambda: _summary(session))

    @app.post("/api/kb/{kb_id}/answers")
    def answers(kb_id: str, request: AnswersRequest):
        session = registry.get(kb_id)
        q = _parse_query_or_400(request.query)

        def run():
            result = session.context.certain(q, k=request.k, method=request.method)
            return {
                "answers": [list(row) for row in result.sorted_tuples()],
                "method": result.method.value,
                "exact": result.exact,
                "rewriting_size": result.rewriting_size,
            }
        return _guarded(run)

    @app.post("/api/kb/{kb_id}/moves")
    def moves(kb_id: str, request: MovesRequest):
        session = registry.get(kb_id)
        if request.direction not in ("relax", "restrain"):
            raise HTTPException(status_code=400,
                                detail={"error": "direction must be relax or restrain"})
        q = _parse_query_or_400(request.query)

        def run():
            enumerate_moves = relax_moves if request.direction == "relax" else restrain_moves
            found = enumerate_moves(q, session.context, data_driven=request.data_driven)
            version = session.context.version
            return {"moves": [_move_payload(m, version) for m in found]}
        return _guarded(run)

    @app.post("/api/kb/{kb_id}/apply")
    def apply(kb_id: str, request: ApplyRequest):
        session = registry.get(kb_id)
        q = _parse_query_or_400(request.query)
        token = request.move_id
        if ":" not in token:
            raise HTTPException(status_code=400, detail={"error": "malformed move id"})
        version_part, move_hash = token.split(":", 1)
        if version_part != f"v{session.context.version}":
            raise HTTPException(status_code=410,
                                detail={"error": "move was computed against a "
                                                 "different KB version"})

        def run():
            for enumerate_moves in (restrain_moves, relax_moves):
                for move in enumerate_moves(q, session.context, data_driven=True):
                    if move.move_id == move_hash:
                        return {"query": syntax.query_text(move.result)}
            raise HTTPException(status_code=400,
                                detail={"error": "move is not applicable to this query"})
        return _guarded(run)

    @app.post("/api/kb/{kb_id}/navigate")
    def navigate(kb_id: str, request: NavigateRequest):
        session = registry.get(kb_id)
        if request.direction not in ("up", "down"):
            raise HTTPException(status_code=400,
                                detail={"error": "direction must be up or down"})
        q = _parse_query_or_400(request.query)
        var = Variable(request.var.lstrip("?"))

        def run():
            navigate_fn = roll_up if request.direction == "up" else drill_down
            chains = navigate_fn(q, var, session.context)
            version = session.context.version
            return {"chains": [{
                "moves": [_move_payload(m, version) for m in chain.moves],
                "result_query": syntax.query_text(chain.result),
                "guard_role": chain.guard_role,
                "source_categories": list(chain.source_categories),
                "target_categories": list(chain.target_categories),
            } for chain in chains]}
        return _guarded(run)

    return app
