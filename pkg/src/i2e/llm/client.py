"""Chat-style LLM gateway shared by the refinement and evaluation agents.

One entry point, :func:`complete`, handles prompt dispatch, structured
output enforcement with repair re-prompts, and context-length guarding.
Backends are pluggable: an HTTP adapter for real deployments and a
scriptable mock (``i2e.llm.mock``) for everything test-shaped.
"""

from __future__ import annotations

import os
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Protocol

import requests

from ..errors import AuthFailure, BackendUnavailable, ContextLengthExceeded
from .schemas import extract_json, validate_against_schema
from .tokens import estimate_tokens


@dataclass(frozen=True)
class LlmRequest:
    system_prompt: str
    user_prompt: str
    response_schema_id: str
    schema_args: dict = field(default_factory=dict)
    temperature: float = 0.0
    max_output_tokens: int = 2048


@dataclass
class LlmResponse:
    raw_text: str
    parsed: Any | None
    parse_failure: str | None
    usage: dict[str, int]
    model_id: str
    repair_retries: int = 0

    @property
    def ok(self) -> bool:
        return self.parsed is not None


@dataclass(frozen=True)
class LlmBackendConfig:
    endpoint_url: str
    auth_token_env: str = "I2E_LLM_TOKEN"
    model_id: str = ""
    timeout_ms: int = 60_000
    max_retries: int = 2
    retry_backoff_ms: int = 250
    schema_repair_retries: int = 2
    max_context_tokens: int = 32_768
    max_concurrency: int = 4

    def __post_init__(self):
        if self.timeout_ms <= 0 or self.max_retries < 0:
            raise ValueError("timeout_ms must be > 0 and max_retries >= 0")


class LlmBackend(Protocol):
    """Minimal surface a backend must provide."""

    context_limit: int | None

    def generate(self, req: LlmRequest) -> tuple[str, str]:
        """Return (raw_text, model_id) for a request."""
        ...


class HttpLlmBackend:
    """Adapter speaking the internal wire contract over HTTP.

    POST ``{model, system, user, temperature, max_output_tokens}`` and
    expect ``{"text": ..., "model_id": ...}`` back. Transport failures
    are retried with fixed backoff; total attempts = max_retries + 1.
    Concurrent requests are capped per backend, with an optional minimum
    spacing between request starts to respect provider rate limits.
    """

    def __init__(self, cfg: LlmBackendConfig, session: requests.Session | None = None,
                 min_request_interval_ms: int = 0):
        self.cfg = cfg
        self.context_limit = cfg.max_context_tokens
        self.attempts_made = 0
        self._session = session or requests.Session()
        self._sem = threading.Semaphore(cfg.max_concurrency)
        self._interval = min_request_interval_ms / 1000.0
        self._last_start = 0.0
        self._rate_lock = threading.Lock()

    def _pace(self) -> None:
        if self._interval <= 0:
            return
        with self._rate_lock:
            wait = self._last_start + self._interval - time.monotonic()
            if wait > 0:
                time.sleep(wait)
            self._last_start = time.monotonic()

    def generate(self, req: LlmRequest) -> tuple[str, str]:
        with self._sem:
            self._pace()
            return self._generate(req)

    def _generate(self, req: LlmRequest) -> tuple[str, str]:
        token = os.environ.get(self.cfg.auth_token_env, "")
        headers = {"Content-Type": "application/json"}
        if token:
            headers["Authorization"] = f"Bearer {token}"
        payload = {
            "model": self.cfg.model_id,
            "system": req.system_prompt,
            "user": req.user_prompt,
            "temperature": req.temperature,
            "max_output_tokens": req.max_output_tokens,
        }
        self.attempts_made = 0
        last_error: Exception | None = None
        for attempt in range(self.cfg.max_retries + 1):
            self.attempts_made = attempt + 1
            try:
                resp = self._session.post(
                    self.cfg.endpoint_url, json=payload,
                    headers=headers, timeout=self.cfg.timeout_ms / 1000.0)
            except requests.RequestException as exc:
                last_error = exc
                if attempt < self.cfg.max_retries:
                    time.sleep(self.cfg.retry_backoff_ms / 1000.0)
                continue
            if resp.status_code in (401, 403):
                raise AuthFailure(f"backend returned {resp.status_code}")
            if resp.status_code >= 500:
                last_error = BackendUnavailable(
                    f"backend returned {resp.status_code}",
                    attempts=self.attempts_made)
                if attempt < self.cfg.max_retries:
                    time.sleep(self.cfg.retry_backoff_ms / 1000.0)
                continue
            body = resp.json()
            return str(body.get("text", "")), str(body.get("model_id", self.cfg.model_id))
        raise BackendUnavailable(
            f"backend unreachable after {self.attempts_made} attempts: {last_error}",
            attempts=self.attempts_made)


def complete(req: LlmRequest, backend: LlmBackend,
             repair_retries: int = 2) -> LlmResponse:
    """Run a request, enforce its response schema, and repair if needed.

    On a shape violation the request is re-sent with the violation list
    appended, up to ``repair_retries`` extra attempts; a reply that never
    conforms comes back as a ParseFailure response, never as a silently
    unvalidated value.
    """
    limit = getattr(backend, "context_limit", None)
    if limit is not None:
        estimate = estimate_tokens(req.system_prompt) + estimate_tokens(req.user_prompt)
        if estimate > limit:
            raise ContextLengthExceeded(
                f"request estimates {estimate} tokens, backend limit {limit}")

    current = req
    failure = ""
    raw_text = ""
    model_id = ""
    for attempt in range(repair_retries + 1):
        raw_text, model_id = backend.generate(current)
        parsed = extract_json(raw_text)
        if parsed is None:
            failure = "no JSON value found in reply"
        else:
            problems = validate_against_schema(
                req.response_schema_id, parsed, req.schema_args)
            if not problems:
                return LlmResponse(
                    raw_text=raw_text,
                    parsed=parsed,
                    parse_failure=None,
                    usage=_usage(current, raw_text),
                    model_id=model_id,
                    repair_retries=attempt,
                )
            failure = "; ".join(problems)
        if attempt < repair_retries:
            current = LlmRequest(
                system_prompt=req.system_prompt,
                user_prompt=(current.user_prompt
                             + "\n\nYour previous reply did not conform: "
                             + failure
                             + "\nReturn only the corrected JSON."),
                response_schema_id=req.response_schema_id,
                schema_args=req.schema_args,
                temperature=req.temperature,
                max_output_tokens=req.max_output_tokens,
            )
    return LlmResponse(
        raw_text=raw_text,
        parsed=None,
        parse_failure=failure,
        usage=_usage(current, raw_text),
        model_id=model_id,
        repair_retries=repair_retries,
    )


def _usage(req: LlmRequest, raw_text: str) -> dict[str, int]:
    return {
        "input_tokens": estimate_tokens(req.system_prompt)
        + estimate_tokens(req.user_prompt),
        "output_tokens": estimate_tokens(raw_text),
    }
