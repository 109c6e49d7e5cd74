"""Client over an external ASR + diarization service.

The gateway is backend-agnostic: every engine adapter translates into
one internal wire contract (a JSON list of ``{speaker, start_ms,
end_ms, text}``), and any speaker label that is not clearly teacher or
child becomes ``unknown`` — diarization output carries role labels
only, never identities.

Endpoint URLs with the ``mock:`` scheme dispatch to the deterministic
fixture backend in :mod:`i2e.asr.mock`.
"""

from __future__ import annotations

import os
import threading
import time
from dataclasses import dataclass, field

import requests

from ..errors import (
    AudioUnreadable,
    AuthFailure,
    BackendUnavailable,
    MalformedBackendResponse,
)
from ..model import AudioSession, Provenance, Segment, SpeakerRole, Transcript
from ..model.validate import validate_transcript

_ROLE_LABELS = {
    "teacher": SpeakerRole.TEACHER,
    "adult": SpeakerRole.TEACHER,
    "child": SpeakerRole.CHILD,
    "student": SpeakerRole.CHILD,
    "unknown": SpeakerRole.UNKNOWN,
}


@dataclass(frozen=True)
class AsrBackendConfig:
    endpoint_url: str
    auth_token_env: str = "I2E_ASR_TOKEN"
    model_tag: str = ""
    timeout_ms: int = 120_000
    max_retries: int = 2
    retry_backoff_ms: int = 500
    max_concurrency: int = 4

    def __post_init__(self):
        if self.timeout_ms <= 0 or self.max_retries < 0:
            raise ValueError("timeout_ms must be > 0 and max_retries >= 0")


@dataclass
class AsrResult:
    transcript: Transcript
    backend_latency_ms: int
    warnings: list[str] = field(default_factory=list)


class HttpAsrAdapter:
    """Speaks the internal wire contract to a real transcription service.

    Requests carry a session-scoped idempotency key so a retried upload
    never triggers a duplicate (and billed) transcription. Total
    attempts = max_retries + 1, observable via ``attempts_made``.
    """

    def __init__(self, cfg: AsrBackendConfig, session: requests.Session | None = None):
        self.cfg = cfg
        self.attempts_made = 0
        self._session = session or requests.Session()
        self._sem = threading.Semaphore(cfg.max_concurrency)

    def transcribe(self, session: AudioSession) -> AsrResult:
        if not session.audio_uri:
            raise AudioUnreadable(f"session {session.session_id!r} has no audio_uri")
        token = os.environ.get(self.cfg.auth_token_env, "")
        headers = {
            "Content-Type": "application/json",
            "Idempotency-Key": f"asr-{session.session_id}",
        }
        if token:
            headers["Authorization"] = f"Bearer {token}"
        payload = {
            "session_id": session.session_id,
            "audio_uri": session.audio_uri,
            "model_tag": self.cfg.model_tag,
        }
        self.attempts_made = 0
        started = time.monotonic()
        last_error: Exception | None = None
        with self._sem:
            for attempt in range(self.cfg.max_retries + 1):
                self.attempts_made = attempt + 1
                try:
                    resp = self._session.post(
                        self.cfg.endpoint_url, json=payload, headers=headers,
                        timeout=self.cfg.timeout_ms / 1000.0)
                except requests.RequestException as exc:
                    last_error = exc
                    if attempt < self.cfg.max_retries:
                        time.sleep(self.cfg.retry_backoff_ms / 1000.0)
                    continue
                if resp.status_code in (401, 403):
                    raise AuthFailure(f"ASR backend returned {resp.status_code}")
                if resp.status_code >= 500:
                    last_error = BackendUnavailable(
                        f"ASR backend returned {resp.status_code}",
                        attempts=self.attempts_made)
                    if attempt < self.cfg.max_retries:
                        time.sleep(self.cfg.retry_backoff_ms / 1000.0)
                    continue
                latency_ms = int((time.monotonic() - started) * 1000)
                return self._map_response(resp, session, latency_ms)
        raise BackendUnavailable(
            f"ASR backend unreachable after {self.attempts_made} attempts: {last_error}",
            attempts=self.attempts_made)

    def _map_response(self, resp, session: AudioSession, latency_ms: int) -> AsrResult:
        try:
            body = resp.json()
        except ValueError as exc:
            raise MalformedBackendResponse(f"non-JSON ASR response: {exc}")
        segments_raw = body.get("segments")
        if not isinstance(segments_raw, list):
            raise MalformedBackendResponse("ASR response missing 'segments' list")
        segments = []
        warnings: list[str] = []
        for i, raw in enumerate(segments_raw):
            try:
                role = map_speaker_label(str(raw.get("speaker", "")))
                if role == SpeakerRole.UNKNOWN and raw.get("speaker") not in (None, "unknown"):
                    warnings.append(
                        f"segment {i}: unmapped speaker label {raw.get('speaker')!r}")
                segments.append(Segment(
                    id=str(raw.get("id", f"seg{i + 1}")),
                    speaker=role,
                    start_ms=int(raw["start_ms"]),
                    end_ms=int(raw["end_ms"]),
                    text=str(raw["text"]),
                ))
            except (KeyError, TypeError, ValueError) as exc:
                raise MalformedBackendResponse(
                    f"ASR response segment {i} not mappable: {exc}")
        transcript = Transcript(
            session_id=session.session_id,
            provenance=Provenance.RAW,
            segments=tuple(segments),
            source_meta={"asr_backend": self.cfg.endpoint_url,
                         "model_tag": self.cfg.model_tag},
        )
        return _checked(transcript, latency_ms, warnings)


def map_speaker_label(label: str) -> SpeakerRole:
    return _ROLE_LABELS.get(label.strip().lower(), SpeakerRole.UNKNOWN)


def transcribe(session: AudioSession, cfg: AsrBackendConfig) -> AsrResult:
    """Turn an AudioSession into a validated Raw transcript."""
    if cfg.endpoint_url.startswith("mock:"):
        from .mock import mock_backend_transcribe
        return mock_backend_transcribe(session, cfg)
    return HttpAsrAdapter(cfg).transcribe(session)


def _checked(transcript: Transcript, latency_ms: int,
             warnings: list[str]) -> AsrResult:
    violations = validate_transcript(transcript)
    if violations:
        raise MalformedBackendResponse(
            "ASR output fails transcript invariants: "
            + "; ".join(str(v) for v in violations))
    return AsrResult(transcript=transcript, backend_latency_ms=latency_ms,
                     warnings=warnings)
