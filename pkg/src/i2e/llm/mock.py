"""Scriptable LLM backend for offline runs and tests.

Two scripting styles:

* canned replies — ``{"mode": "sequence", "responses": [...]}`` or
  ``{"mode": "keyed", "responses": {"<key>": [...], "default": [...]}}``
  where a key is the first 16 hex chars of sha256(system + RS + user).
  A consumed list repeats its last entry, so retry loops always get an
  answer.
* behaviors — ``{"behavior": "..."}`` computes a deterministic reply
  from the prompt itself. Available: ``echo-refine`` (returns window
  text unchanged), ``lexicon-refine`` (applies the confusion pairs the
  prompt lists), ``keyword-eval`` (observed iff a positive example
  occurs verbatim in a segment), ``hallucinate-eval`` (always cites a
  fabricated quote), ``flag-then-fix-eval`` (hallucinates until the
  re-prompt arrives, then answers with sound evidence).

Replies are plain text run through the normal parse/validate path, so
mocks exercise the same machinery as a live backend.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
from pathlib import Path

from ..errors import InvalidFixture
from .client import LlmRequest

# Prompt line shapes the behaviors understand; kept in sync with the
# agents' renderers.
SEGMENT_LINE = re.compile(
    r"^\[(?P<id>[^|\]]+)\|(?P<speaker>[a-z]+)\] (?P<text>.*?)(?P<ctx> \[read-only\])?$")
LEXICON_LINE = re.compile(r"^- (?P<wrong>.+?) → (?P<right>.+?) \(")
POSITIVE_LINE = re.compile(r"^\+ (?P<example>.+)$")
REPROMPT_MARK = "Evidence check failed"


def request_key(req: LlmRequest) -> str:
    digest = hashlib.sha256(
        (req.system_prompt + "\x1e" + req.user_prompt).encode("utf-8"))
    return digest.hexdigest()[:16]


class MockLlmBackend:
    """Deterministic in-process stand-in for a chat model."""

    context_limit: int | None = None

    def __init__(self, script: dict):
        if not isinstance(script, dict):
            raise InvalidFixture("mock script must be a JSON object")
        self.script = script
        self.model_id = script.get("model_id") or (
            f"mock:{script['behavior']}" if "behavior" in script
            else f"mock:{script.get('mode', 'sequence')}")
        self.calls = 0
        self._lock = threading.Lock()
        self._cursor = 0
        self._key_cursors: dict[str, int] = {}
        mode = script.get("mode")
        behavior = script.get("behavior")
        if mode is None and behavior is None:
            raise InvalidFixture("mock script needs 'mode' or 'behavior'")
        if mode is not None and mode not in ("sequence", "keyed"):
            raise InvalidFixture(f"unknown mock mode {mode!r}")
        if behavior is not None and behavior not in _BEHAVIORS:
            raise InvalidFixture(f"unknown mock behavior {behavior!r}")

    @classmethod
    def from_file(cls, path: str | Path) -> "MockLlmBackend":
        with open(path, "r", encoding="utf-8") as fh:
            return cls(json.load(fh))

    def generate(self, req: LlmRequest) -> tuple[str, str]:
        with self._lock:
            self.calls += 1
            if "behavior" in self.script:
                text = _BEHAVIORS[self.script["behavior"]](req)
            elif self.script["mode"] == "sequence":
                text = self._next_in(self.script.get("responses", []),
                                     attr="_cursor")
            else:
                key = request_key(req)
                table = self.script.get("responses", {})
                entries = table.get(key, table.get("default", []))
                cursor = self._key_cursors.get(key, 0)
                text = _pick(entries, cursor)
                self._key_cursors[key] = cursor + 1
        return _as_text(text), self.model_id

    def _next_in(self, entries: list, attr: str) -> str:
        if not entries:
            raise InvalidFixture("mock sequence script has no responses")
        text = _pick(entries, self._cursor)
        self._cursor += 1
        return text


def _pick(entries: list, cursor: int):
    if not entries:
        raise InvalidFixture("mock script entry list is empty")
    return entries[min(cursor, len(entries) - 1)]


def _as_text(entry) -> str:
    if isinstance(entry, str):
        return entry
    if isinstance(entry, dict):
        return json.dumps(entry, ensure_ascii=False)
    raise InvalidFixture(f"mock response must be string or object, got {type(entry).__name__}")


# --- prompt introspection ---------------------------------------------------

def _window_segments(req: LlmRequest) -> list[tuple[str, str, bool]]:
    """(id, text, editable) triples parsed from a refine/eval prompt."""
    out = []
    for line in req.user_prompt.splitlines():
        m = SEGMENT_LINE.match(line)
        if m:
            out.append((m.group("id"), m.group("text"), m.group("ctx") is None))
    return out


def _lexicon_pairs(req: LlmRequest) -> list[tuple[str, str]]:
    pairs = []
    for line in req.user_prompt.splitlines():
        m = LEXICON_LINE.match(line)
        if m:
            pairs.append((m.group("wrong"), m.group("right")))
    return pairs


def _positive_examples(req: LlmRequest) -> list[str]:
    out = []
    for line in req.user_prompt.splitlines():
        m = POSITIVE_LINE.match(line)
        if m:
            out.append(m.group("example"))
    return out


# --- behaviors ---------------------------------------------------------------

def _echo_refine(req: LlmRequest) -> str:
    corrections = {seg_id: text
                   for seg_id, text, editable in _window_segments(req) if editable}
    return json.dumps({"corrections": corrections}, ensure_ascii=False)


def _lexicon_refine(req: LlmRequest) -> str:
    pairs = _lexicon_pairs(req)
    corrections = {}
    for seg_id, text, editable in _window_segments(req):
        if not editable:
            continue
        for wrong, right in pairs:
            text = text.replace(wrong, right)
        corrections[seg_id] = text
    return json.dumps({"corrections": corrections}, ensure_ascii=False)


def _keyword_eval(req: LlmRequest) -> str:
    examples = _positive_examples(req)
    for seg_id, text, _ in _window_segments(req):
        for example in examples:
            if example and example in text:
                return json.dumps({
                    "located_utterances": [{"segment_id": seg_id, "quote": example}],
                    "observed": True,
                    "rationale": f"segment {seg_id} shows the target behavior",
                    "suggestion": None,
                }, ensure_ascii=False)
    return json.dumps({
        "located_utterances": [],
        "observed": False,
        "rationale": "no matching utterance found in the session",
        "suggestion": "model the target behavior explicitly in the next session",
    }, ensure_ascii=False)


def _hallucinate_eval(req: LlmRequest) -> str:
    segments = _window_segments(req)
    seg_id, text = (segments[0][0], segments[0][1]) if segments else ("missing", "")
    return json.dumps({
        "located_utterances": [{"segment_id": seg_id, "quote": text + "（捏造）"}],
        "observed": True,
        "rationale": "behavior clearly present",
        "suggestion": None,
    }, ensure_ascii=False)


def _flag_then_fix_eval(req: LlmRequest) -> str:
    if REPROMPT_MARK in req.user_prompt:
        segments = _window_segments(req)
        if segments:
            seg_id, text, _ = segments[0]
            return json.dumps({
                "located_utterances": [{"segment_id": seg_id, "quote": text}],
                "observed": True,
                "rationale": f"segment {seg_id} quoted verbatim",
                "suggestion": None,
            }, ensure_ascii=False)
    return _hallucinate_eval(req)


def _dispatch(refine_fn, eval_fn):
    def behavior(req: LlmRequest) -> str:
        if req.response_schema_id == "refine-map":
            return refine_fn(req)
        return eval_fn(req)
    return behavior


_BEHAVIORS = {
    "echo-refine": _echo_refine,
    "lexicon-refine": _lexicon_refine,
    "keyword-eval": _keyword_eval,
    "hallucinate-eval": _hallucinate_eval,
    "flag-then-fix-eval": _flag_then_fix_eval,
    # whole-pipeline behaviors: route per response schema
    "auto": _dispatch(_lexicon_refine, _keyword_eval),
    "auto-flag": _dispatch(_lexicon_refine, _hallucinate_eval),
    "auto-flag-fix": _dispatch(_lexicon_refine, _flag_then_fix_eval),
}
