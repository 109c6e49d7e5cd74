"""Staged pipeline execution over the session store.

Stages run strictly in order per session (transcribe, refine, evaluate,
score); each persists its artifacts before the state machine advances,
so a crash at any boundary resumes at the first incomplete stage and an
uninterrupted rerun is a no-op. Sessions execute in parallel on a
bounded worker pool; a queue directory keeps pending work across
restarts.
"""

from __future__ import annotations

import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..asr.gateway import AsrBackendConfig, transcribe
from ..errors import I2eError, InvariantViolation
from ..evaluate.agent import EvalParams, evaluate_session
from ..llm.client import HttpLlmBackend, LlmBackend, LlmBackendConfig
from ..llm.mock import MockLlmBackend
from ..metrics.efficiency import TraditionalTimings
from ..model import (
    AudioSession,
    IndicatorJudgment,
    Provenance,
    Transcript,
    ValidationStatus,
)
from ..model.serialize import (
    canonical_serialize,
    dumps_canonical,
    judgment_to_dict,
    loads_json,
    parse_judgments,
    parse_rubric,
    parse_transcript,
    scale_summary_to_dict,
)
from ..model.validate import validate_transcript
from ..refine.agent import RefineParams, refine
from ..refine.lexicon import HomophoneLexicon
from ..rubric.engine import ScoringInput, score_scale
from .reports import build_report
from .store import (
    STAGE_ARTIFACTS,
    STAGES,
    JobState,
    SessionStore,
    STATE_CREATED,
    TERMINAL_DONE,
    TERMINAL_FAILED,
)


@dataclass
class ServiceConfig:
    data_root: Path
    workers: int = 4
    bearer_token: str | None = None
    asr_endpoint: str = "mock:"
    asr_model_tag: str = "paraformer"
    llm_endpoint: str = "mock:"
    llm_model: str = ""
    lexicon_path: Path | None = None
    refine_params: RefineParams = field(default_factory=RefineParams)
    eval_params: EvalParams = field(default_factory=EvalParams)
    traditional: TraditionalTimings = field(
        default_factory=lambda: TraditionalTimings(240.0, 20.0, 120.0))
    max_upload_bytes: int = 64 * 1024 * 1024
    console_dir: Path | None = None

    @classmethod
    def from_env(cls, **overrides) -> "ServiceConfig":
        env = os.environ
        kwargs: dict = {
            "data_root": Path(env.get("I2E_DATA_ROOT", "./i2e-data")),
            "workers": int(env.get("I2E_WORKERS", "4")),
            "bearer_token": env.get("I2E_BEARER_TOKEN") or None,
            "asr_endpoint": env.get("I2E_ASR_ENDPOINT", "mock:"),
            "llm_endpoint": env.get("I2E_LLM_ENDPOINT", "mock:"),
            "llm_model": env.get("I2E_LLM_MODEL", ""),
        }
        if env.get("I2E_LEXICON"):
            kwargs["lexicon_path"] = Path(env["I2E_LEXICON"])
        if env.get("I2E_CONSOLE_DIR"):
            kwargs["console_dir"] = Path(env["I2E_CONSOLE_DIR"])
        kwargs.update(overrides)
        return cls(**kwargs)


@dataclass
class StageProgress:
    indicators_done: int = 0
    indicators_flagged: int = 0
    indicators_total: int = 0


class PipelineRunner:
    """Owns per-session execution; one writer per session at a time."""

    def __init__(self, store: SessionStore, config: ServiceConfig):
        self.store = store
        self.config = config
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        self._running: set[str] = set()
        self._progress: dict[str, StageProgress] = {}
        self._pool = ThreadPoolExecutor(max_workers=max(1, config.workers),
                                        thread_name_prefix="i2e-worker")

    # --- scheduling --------------------------------------------------------

    def submit(self, session_id: str, options: dict) -> None:
        self.store.enqueue(session_id, options)
        state = self.store.load_state(session_id)
        if state.state == TERMINAL_FAILED:
            state.interventions += 1
        state.run_options = options
        state.transition("queued")
        self.store.save_state(state)
        with self._locks_guard:
            self._running.add(session_id)
        self._pool.submit(self._guarded_run, session_id)

    def resume_pending(self) -> int:
        """Re-submit tickets left in the queue by a previous process."""
        count = 0
        for ticket in self.store.pending_tickets():
            sid = ticket["session_id"]
            if self.is_running(sid):
                continue
            with self._locks_guard:
                self._running.add(sid)
            self._pool.submit(self._guarded_run, sid)
            count += 1
        return count

    def is_running(self, session_id: str) -> bool:
        with self._locks_guard:
            return session_id in self._running

    def progress(self, session_id: str) -> StageProgress:
        return self._progress.get(session_id, StageProgress())

    def shutdown(self) -> None:
        self._pool.shutdown(wait=True)

    def _guarded_run(self, session_id: str) -> None:
        try:
            self.run_session(session_id)
        finally:
            with self._locks_guard:
                self._running.discard(session_id)

    def _lock_for(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    # --- execution -----------------------------------------------------------

    def run_session(self, session_id: str,
                    stop_after: str | None = None) -> JobState:
        """Execute stages from the first incomplete one.

        ``stop_after`` halts after the named stage completes (used by
        crash-resume tests); state then still points at that stage and a
        later run picks up from the next.
        """
        with self._lock_for(session_id):
            state = self.store.load_state(session_id)
            options = state.run_options or {}
            try:
                for stage in STAGES:
                    if self.store.stage_complete(session_id, stage):
                        continue
                    state.transition(stage)
                    self.store.save_state(state)
                    self.store.append_audit(session_id,
                                            {"type": "stage_started", "stage": stage})
                    started = time.monotonic()
                    self._run_stage(session_id, stage, options)
                    elapsed_ms = int((time.monotonic() - started) * 1000)
                    state.stage_ms[stage] = state.stage_ms.get(stage, 0) + elapsed_ms
                    self.store.save_state(state)
                    self.store.append_audit(
                        session_id, {"type": "stage_completed", "stage": stage,
                                     "elapsed_ms": elapsed_ms})
                    if stop_after == stage:
                        return state
                state.failed_stage = None
                state.failure_reason = None
                state.transition(TERMINAL_DONE)
                self.store.save_state(state)
                self.store.dequeue(session_id)
                return state
            except Exception as exc:
                failed_stage = state.state if state.state in STAGES else "unknown"
                state.failed_stage = failed_stage
                state.failure_reason = f"{type(exc).__name__}: {exc}"
                state.retry_count[failed_stage] = (
                    state.retry_count.get(failed_stage, 0) + 1)
                state.transition(TERMINAL_FAILED)
                self.store.save_state(state)
                self.store.dequeue(session_id)
                self.store.append_audit(
                    session_id, {"type": "stage_failed", "stage": failed_stage,
                                 "reason": state.failure_reason})
                if not isinstance(exc, I2eError):
                    raise
                return state

    def _run_stage(self, session_id: str, stage: str, options: dict) -> None:
        if stage == "transcribing":
            self._stage_transcribe(session_id, options)
        elif stage == "refining":
            self._stage_refine(session_id, options)
        elif stage == "evaluating":
            self._stage_evaluate(session_id, options)
        elif stage == "scoring":
            self._stage_score(session_id, options)
        else:
            raise InvariantViolation(f"unknown stage {stage!r}")

    # --- stages -----------------------------------------------------------------

    def _stage_transcribe(self, session_id: str, options: dict) -> None:
        # A transcript upload satisfied this stage at ingestion time.
        meta = self.store.read_meta(session_id)
        audio_path = self.store.session_dir(session_id) / "audio.bin"
        if not audio_path.exists():
            raise InvariantViolation(
                f"session {session_id!r}: no transcript artifact and no audio")
        session = AudioSession(
            session_id=meta.get("source_session_id", session_id),
            duration_ms=int(meta.get("duration_ms", 1)),
            classroom_meta={k: str(v) for k, v in
                            meta.get("classroom_meta", {}).items()},
            audio_uri=str(audio_path),
        )
        cfg = self._asr_config(options)
        result = transcribe(session, cfg)
        violations = validate_transcript(result.transcript, session=session)
        if violations:
            raise InvariantViolation(
                "transcript inconsistent with session: "
                + "; ".join(str(v) for v in violations))
        self.store.write_artifact(session_id, "raw_transcript.json",
                                  canonical_serialize(result.transcript))

    def _stage_refine(self, session_id: str, options: dict) -> None:
        raw = parse_transcript(
            self.store.read_artifact(session_id, "raw_transcript.json"))
        lexicon = self._lexicon(options)
        backend = self._llm_backend(options)
        refined, audit = refine(raw, lexicon, backend, self.config.refine_params)
        violations = validate_transcript(refined, raw_parent=raw)
        if violations:
            raise InvariantViolation(
                "refined transcript fails invariants: "
                + "; ".join(str(v) for v in violations))
        self.store.write_artifact(session_id, "refined_transcript.json",
                                  canonical_serialize(refined))
        self.store.write_artifact(session_id, "refine_audit.json",
                                  dumps_canonical(audit.to_dict()))

    def _stage_evaluate(self, session_id: str, options: dict) -> None:
        refined = parse_transcript(
            self.store.read_artifact(session_id, "refined_transcript.json"))
        backend = self._llm_backend(options)
        judgments_by_scale: dict[str, list[IndicatorJudgment]] = {}
        scale_keys = options.get("rubrics") or self.store.rubric_keys()
        if not scale_keys:
            raise InvariantViolation("no rubric selected and none stored")

        rubrics = {key: self._load_stored_rubric(key) for key in scale_keys}
        total = sum(
            sum(1 for item in rubric.items
                for ind in item.indicators if ind.language_accessible)
            for rubric in rubrics.values())
        progress = StageProgress(indicators_total=total)
        self._progress[session_id] = progress
        progress_lock = threading.Lock()

        def on_progress(judgment: IndicatorJudgment) -> None:
            with progress_lock:
                progress.indicators_done += 1
                if judgment.validation.is_flagged:
                    progress.indicators_flagged += 1

        for key in scale_keys:
            judgments_by_scale[key] = evaluate_session(
                rubrics[key], refined, backend, self.config.eval_params,
                on_result=on_progress)

        doc = {key: [judgment_to_dict(j) for j in judgments_by_scale[key]]
               for key in sorted(judgments_by_scale)}
        self.store.write_artifact(session_id, "judgments.json",
                                  dumps_canonical(doc))

    def _stage_score(self, session_id: str, options: dict) -> None:
        rescore(self.store, session_id, self.config)

    # --- backend/config resolution --------------------------------------------------

    def _asr_config(self, options: dict) -> AsrBackendConfig:
        opts = options.get("asr", {})
        return AsrBackendConfig(
            endpoint_url=opts.get("endpoint", self.config.asr_endpoint),
            model_tag=opts.get("model_tag", self.config.asr_model_tag),
        )

    def _llm_backend(self, options: dict) -> LlmBackend:
        opts = options.get("llm", {})
        endpoint = opts.get("endpoint", self.config.llm_endpoint)
        return make_llm_backend(endpoint, opts.get("model",
                                                   self.config.llm_model))

    def _lexicon(self, options: dict) -> HomophoneLexicon:
        path = options.get("lexicon") or self.config.lexicon_path
        if path:
            return HomophoneLexicon.from_file(path)
        return HomophoneLexicon()

    def _load_stored_rubric(self, key: str):
        data = self.store.get_rubric_bytes(key)
        if data is None:
            raise InvariantViolation(f"rubric {key!r} not stored")
        return parse_rubric(data)


def make_llm_backend(endpoint: str, model: str = "") -> LlmBackend:
    """``mock:<script-path>`` builds the scripted mock; anything else is
    treated as an HTTP endpoint."""
    if endpoint.startswith("mock:"):
        script_path = endpoint[len("mock:"):]
        if script_path:
            return MockLlmBackend.from_file(script_path)
        return MockLlmBackend({"behavior": "echo-refine"})
    return HttpLlmBackend(LlmBackendConfig(endpoint_url=endpoint, model_id=model))


def resolve_judgments(judgments: list[IndicatorJudgment]) -> dict[str, bool]:
    """Observed values with overrides applied (overridden wins as-is)."""
    return {j.indicator_id: j.observed for j in judgments}


def rescore(store: SessionStore, session_id: str, config: ServiceConfig) -> None:
    """Recompute summaries and the report from the judgments artifact.

    Runs as the scoring stage and again after every expert override.
    """
    raw = store.read_artifact(session_id, "judgments.json")
    if raw is None:
        raise InvariantViolation(f"session {session_id!r} has no judgments")
    doc = loads_json(raw)
    refined = parse_transcript(
        store.read_artifact(session_id, "refined_transcript.json"))
    state = store.load_state(session_id)

    summaries = {}
    reports = {}
    for key in sorted(doc):
        rubric_bytes = store.get_rubric_bytes(key)
        if rubric_bytes is None:
            raise InvariantViolation(f"rubric {key!r} not stored")
        rubric = parse_rubric(rubric_bytes)
        judgments = parse_judgments(dumps_canonical(doc[key]))
        summary = score_scale(
            ScoringInput(rubric=rubric, judgments=resolve_judgments(judgments)))
        summaries[key] = summary
        reports[key] = (rubric, judgments, summary)

    store.write_artifact(session_id, "scale_summaries.json", dumps_canonical(
        {key: scale_summary_to_dict(s) for key, s in sorted(summaries.items())}))
    report = build_report(session_id, reports, refined, state,
                          config.traditional)
    store.write_artifact(session_id, "report.json", dumps_canonical(report))


def apply_override(store: SessionStore, config: ServiceConfig,
                   session_id: str, indicator_id: str, new_observed: bool,
                   expert_id: str, note: str = "") -> IndicatorJudgment:
    """Set an expert decision on a judgment, then rescore.

    The audit log keeps every override (append-only); the judgments
    artifact keeps only the latest state per indicator, so the last
    write wins for scoring.
    """
    raw = store.read_artifact(session_id, "judgments.json")
    if raw is None:
        raise KeyError(f"session {session_id!r} has no judgments")
    doc = loads_json(raw)
    updated: IndicatorJudgment | None = None
    for key in doc:
        judgments = parse_judgments(dumps_canonical(doc[key]))
        for i, j in enumerate(judgments):
            if j.indicator_id == indicator_id:
                store.append_audit(session_id, {
                    "type": "override",
                    "indicator_id": indicator_id,
                    "expert_id": expert_id,
                    "new_observed": new_observed,
                    "note": note,
                    "prior": judgment_to_dict(j),
                })
                updated = replace(
                    j, observed=new_observed,
                    validation=ValidationStatus.OVERRIDDEN,
                    overridden_by=expert_id)
                doc[key][i] = judgment_to_dict(updated)
                break
        if updated:
            break
    if updated is None:
        raise KeyError(f"no judgment for indicator {indicator_id!r}")
    store.write_artifact(session_id, "judgments.json", dumps_canonical(doc))
    rescore(store, session_id, config)
    return updated
