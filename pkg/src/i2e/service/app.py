"""HTTP service for the upload → process → report → override workflow.

All endpoints live under ``/api/v1`` and speak the canonical JSON
schemas. Session processing happens on a worker pool; clients poll the
status endpoint. A static console bundle, when configured, is served
under ``/console``.
"""

from __future__ import annotations

import json
from contextlib import asynccontextmanager
from typing import Any

from fastapi import FastAPI, Form, HTTPException, Request, UploadFile
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field

from ..errors import InvariantViolation, KeyMismatch, ParseError
from ..metrics.agreement import agreement
from ..model.serialize import (
    canonical_serialize,
    dumps_canonical,
    loads_json,
    parse_annotation,
    parse_judgments,
    parse_rubric,
    parse_transcript,
)
from ..model.validate import validate_transcript
from .jobs import PipelineRunner, ServiceConfig, apply_override
from .store import (
    STAGES,
    STATE_CREATED,
    SessionStore,
    TERMINAL_DONE,
    TERMINAL_FAILED,
    _safe_name,
)


class RunOptions(BaseModel):
    rubrics: list[str] | None = None
    skip_asr: bool = False
    asr: dict[str, Any] = Field(default_factory=dict)
    llm: dict[str, Any] = Field(default_factory=dict)
    lexicon: str | None = None


class OverrideBody(BaseModel):
    new_observed: bool
    expert_id: str = Field(min_length=1)
    note: str = ""


class AgreementBody(BaseModel):
    session_id: str
    annotation: dict[str, Any]


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig.from_env()
    store = SessionStore(config.data_root)
    runner = PipelineRunner(store, config)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        runner.resume_pending()
        yield
        runner.shutdown()

    app = FastAPI(title="i2e assessment service", lifespan=lifespan)
    app.state.store = store
    app.state.runner = runner
    app.state.config = config

    @app.middleware("http")
    async def bearer_guard(request: Request, call_next):
        if config.bearer_token and request.url.path.startswith("/api/"):
            header = request.headers.get("authorization", "")
            if header != f"Bearer {config.bearer_token}":
                return JSONResponse({"detail": "missing or bad bearer token"},
                                    status_code=401)
        return await call_next(request)

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    # --- sessions ----------------------------------------------------------

    @app.post("/api/v1/sessions")
    async def create_session(transcript: UploadFile | None = None,
                             audio: UploadFile | None = None,
                             meta: str = Form(default="{}"),
                             idempotency_key: str | None = Form(default=None)):
        if (transcript is None) == (audio is None):
            raise HTTPException(400, "upload exactly one of 'transcript' or 'audio'")
        upload = transcript if transcript is not None else audio
        payload = await upload.read()
        if len(payload) > config.max_upload_bytes:
            raise HTTPException(413, "upload exceeds size limit")
        try:
            meta_doc = json.loads(meta) if meta else {}
        except json.JSONDecodeError as exc:
            raise HTTPException(400, f"meta is not valid JSON: {exc}")
        if not isinstance(meta_doc, dict):
            raise HTTPException(400, "meta must be a JSON object")

        payload_sha = store.payload_hash(payload + meta.encode("utf-8"))
        if idempotency_key:
            existing = store.idempotency_lookup(idempotency_key)
            if existing is not None:
                if existing["payload_sha"] != payload_sha:
                    raise HTTPException(
                        409, "idempotency key reused with a different payload")
                return JSONResponse({"session_id": existing["session_id"]},
                                    status_code=200)

        if transcript is not None:
            session_id = _ingest_transcript(store, payload, meta_doc, payload_sha)
        else:
            session_id = _ingest_audio(store, payload, meta_doc, payload_sha)
        if idempotency_key:
            store.idempotency_record(idempotency_key, payload_sha, session_id)
        return JSONResponse({"session_id": session_id}, status_code=201)

    @app.get("/api/v1/sessions")
    async def list_sessions():
        out = []
        for sid in store.session_ids():
            state = store.load_state(sid)
            out.append({"session_id": sid, "state": state.state})
        return out

    @app.post("/api/v1/sessions/{session_id}/run", status_code=202)
    async def run_session(session_id: str, options: RunOptions | None = None):
        _require_session(store, session_id)
        state = store.load_state(session_id)
        if runner.is_running(session_id) or state.state not in (
                STATE_CREATED, TERMINAL_FAILED):
            raise HTTPException(
                409, f"session is {state.state}; run allowed from created or failed")
        opts = (options or RunOptions()).model_dump(exclude_none=True)
        for key in opts.get("rubrics") or []:
            if store.get_rubric_bytes(key) is None:
                raise HTTPException(422, f"rubric {key!r} not stored")
        if not opts.get("rubrics") and not store.rubric_keys():
            raise HTTPException(422, "no rubrics stored; PUT /api/v1/rubrics/{scale} first")
        runner.submit(session_id, opts)
        return {"session_id": session_id, "state": "queued"}

    @app.get("/api/v1/sessions/{session_id}/status")
    async def session_status(session_id: str):
        _require_session(store, session_id)
        state = store.load_state(session_id)
        progress = _progress_view(store, runner, session_id, state.state)
        return {
            "session_id": session_id,
            "state": state.state,
            "failed_stage": state.failed_stage,
            "failure_reason": state.failure_reason,
            "transitions": state.transitions,
            "stage_ms": state.stage_ms,
            "retry_count": state.retry_count,
            "progress": progress,
        }

    @app.get("/api/v1/sessions/{session_id}/report")
    async def session_report(session_id: str, format: str = "json"):
        _require_session(store, session_id)
        data = store.read_artifact(session_id, "report.json")
        if data is None:
            raise HTTPException(409, "report not ready")
        if format == "text":
            from .reports import render_report_text
            return Response(content=render_report_text(json.loads(data)),
                            media_type="text/plain; charset=utf-8")
        return Response(content=data, media_type="application/json")

    @app.get("/api/v1/sessions/{session_id}/transcript")
    async def session_transcript(session_id: str, which: str = "refined"):
        _require_session(store, session_id)
        name = {"refined": "refined_transcript.json",
                "raw": "raw_transcript.json"}.get(which)
        if name is None:
            raise HTTPException(400, "which must be 'raw' or 'refined'")
        data = store.read_artifact(session_id, name)
        if data is None:
            raise HTTPException(409, f"{which} transcript not available")
        return Response(content=data, media_type="application/json")

    @app.get("/api/v1/sessions/{session_id}/audit")
    async def session_audit(session_id: str):
        _require_session(store, session_id)
        return store.read_audit(session_id)

    @app.post("/api/v1/sessions/{session_id}/indicators/{indicator_id}/override")
    async def override_indicator(session_id: str, indicator_id: str,
                                 body: OverrideBody):
        _require_session(store, session_id)
        if not body.expert_id.strip():
            raise HTTPException(422, "expert_id must be non-empty")
        try:
            updated = apply_override(store, config, session_id, indicator_id,
                                     body.new_observed, body.expert_id,
                                     body.note)
        except KeyError as exc:
            raise HTTPException(404, str(exc))
        return json.loads(canonical_serialize(updated))

    # --- rubrics ---------------------------------------------------------------

    @app.get("/api/v1/rubrics")
    async def list_rubrics():
        out = []
        for key in store.rubric_keys():
            rubric = parse_rubric(store.get_rubric_bytes(key))
            out.append({
                "key": key,
                "scale": rubric.scale.value,
                "version": rubric.version,
                "profile": rubric.profile,
                "items": len(rubric.items),
                "indicators": len(rubric.all_indicators()),
            })
        return out

    @app.put("/api/v1/rubrics/{scale_key}")
    async def put_rubric(scale_key: str, request: Request):
        data = await request.body()
        try:
            rubric = parse_rubric(data)
        except ParseError as exc:
            raise HTTPException(400, f"malformed rubric: {exc}")
        except InvariantViolation as exc:
            raise HTTPException(422, str(exc))
        if rubric.scale.value != scale_key:
            raise HTTPException(
                422, f"rubric declares scale {rubric.scale.value!r}, "
                f"stored under {scale_key!r}")
        store.put_rubric(scale_key, canonical_serialize(rubric))
        return {"key": scale_key, "version": rubric.version}

    # --- metrics -------------------------------------------------------------------

    @app.post("/api/v1/metrics/agreement")
    async def metrics_agreement(body: AgreementBody):
        _require_session(store, body.session_id)
        state = store.load_state(body.session_id)
        if state.state != TERMINAL_DONE:
            raise HTTPException(409, f"session is {state.state}, not done")
        try:
            annotation = parse_annotation(dumps_canonical(body.annotation))
        except ParseError as exc:
            raise HTTPException(400, f"malformed annotation: {exc}")
        key = annotation.scale.value
        doc = loads_json(store.read_artifact(body.session_id, "judgments.json"))
        if key not in doc:
            raise HTTPException(422, f"session has no judgments for scale {key!r}")
        judgments = parse_judgments(dumps_canonical(doc[key]))
        model = {j.indicator_id: j.observed for j in judgments}
        rubric = parse_rubric(store.get_rubric_bytes(key))
        try:
            report = agreement(model, annotation, rubric)
        except KeyMismatch as exc:
            return JSONResponse(
                {"detail": "indicator key mismatch",
                 "only_model": exc.only_left,
                 "only_annotation": exc.only_right},
                status_code=422)
        return report.to_dict()

    @app.get("/api/v1/stats")
    async def stats():
        total = succeeded = 0
        stage_totals: dict[str, list[int]] = {}
        for sid in store.session_ids():
            state = store.load_state(sid)
            total += 1
            if state.state == TERMINAL_DONE and state.interventions == 0:
                succeeded += 1
            for stage, ms in state.stage_ms.items():
                stage_totals.setdefault(stage, []).append(ms)
        mean_stage_minutes = {
            stage: (sum(values) / len(values)) / 60_000.0
            for stage, values in sorted(stage_totals.items())}
        return {
            "sessions_total": total,
            "sessions_succeeded": succeeded,
            "success_rate": (succeeded / total) if total else None,
            "mean_stage_minutes": mean_stage_minutes,
        }

    if config.console_dir and config.console_dir.exists():
        from fastapi.staticfiles import StaticFiles
        app.mount("/console", StaticFiles(directory=str(config.console_dir),
                                          html=True), name="console")

    return app


# --- ingestion helpers ----------------------------------------------------------


def _require_session(store: SessionStore, session_id: str) -> None:
    if not store.session_exists(session_id):
        raise HTTPException(404, f"unknown session {session_id!r}")


def _unique_session_id(store: SessionStore, base: str) -> str:
    sid = _safe_name(base)
    if not store.session_exists(sid):
        return sid
    n = 2
    while store.session_exists(f"{sid}-{n}"):
        n += 1
    return f"{sid}-{n}"


def _ingest_transcript(store: SessionStore, payload: bytes, meta_doc: dict,
                       payload_sha: str) -> str:
    try:
        transcript = parse_transcript(payload)
    except ParseError as exc:
        raise HTTPException(400, f"malformed transcript: {exc}")
    violations = validate_transcript(transcript)
    if violations:
        raise HTTPException(400, {
            "error": "transcript fails validation",
            "violations": [str(v) for v in violations]})
    base = transcript.session_id or f"s-{payload_sha[:12]}"
    session_id = _unique_session_id(store, base)
    duration = meta_doc.get("duration_ms")
    if duration is None and transcript.segments:
        duration = max(s.end_ms for s in transcript.segments)
    store.create_session(session_id, {
        "session_id": session_id,
        "source_session_id": transcript.session_id,
        "duration_ms": int(duration or 1),
        "classroom_meta": meta_doc.get("classroom_meta", {}),
        "upload_kind": "transcript",
    })
    # A transcript upload completes the transcription stage by fiat.
    store.write_artifact(session_id, "raw_transcript.json",
                         canonical_serialize(transcript))
    store.append_audit(session_id, {"type": "uploaded", "kind": "transcript",
                                    "payload_sha": payload_sha})
    return session_id


def _ingest_audio(store: SessionStore, payload: bytes, meta_doc: dict,
                  payload_sha: str) -> str:
    duration = meta_doc.get("duration_ms")
    if not isinstance(duration, int) or duration <= 0:
        raise HTTPException(
            400, "audio uploads need meta.duration_ms (positive integer)")
    base = str(meta_doc.get("session_id") or f"s-{payload_sha[:12]}")
    session_id = _unique_session_id(store, base)
    store.create_session(session_id, {
        "session_id": session_id,
        "source_session_id": str(meta_doc.get("session_id") or session_id),
        "duration_ms": duration,
        "classroom_meta": meta_doc.get("classroom_meta", {}),
        "upload_kind": "audio",
    })
    store.write_blob(session_id, "audio.bin", payload)
    store.append_audit(session_id, {"type": "uploaded", "kind": "audio",
                                    "payload_sha": payload_sha})
    return session_id


def _progress_view(store: SessionStore, runner: PipelineRunner,
                   session_id: str, state: str) -> dict:
    if state in ("evaluating",):
        p = runner.progress(session_id)
        return {"indicators_done": p.indicators_done,
                "indicators_flagged": p.indicators_flagged,
                "indicators_total": p.indicators_total}
    data = store.read_artifact(session_id, "judgments.json")
    if data is None:
        return {"indicators_done": 0, "indicators_flagged": 0,
                "indicators_total": None}
    doc = loads_json(data)
    done = flagged = 0
    for key in doc:
        for j in parse_judgments(dumps_canonical(doc[key])):
            done += 1
            if j.validation.is_flagged:
                flagged += 1
    return {"indicators_done": done, "indicators_flagged": flagged,
            "indicators_total": done}
