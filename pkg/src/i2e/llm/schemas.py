"""Structured-output shapes the gateway can enforce on model replies.

Validation here is shape-only (field presence and JSON types): shape
violations trigger the gateway's repair re-prompt. Semantic checks that
need domain context (segment id sets, verbatim evidence) belong to the
agents, which decide between rejection and flagging.
"""

from __future__ import annotations

import json
import re
from typing import Any, Callable

_FENCE = re.compile(r"```(?:json)?\s*(.*?)```", re.DOTALL)


def extract_json(raw_text: str) -> Any | None:
    """Pull the first JSON value out of a model reply.

    Accepts bare JSON, fenced blocks, or an object embedded in prose.
    Returns None when nothing parseable is found.
    """
    candidates = [raw_text.strip()]
    candidates += [m.strip() for m in _FENCE.findall(raw_text)]
    brace = _first_balanced(raw_text)
    if brace:
        candidates.append(brace)
    for cand in candidates:
        if not cand:
            continue
        try:
            return json.loads(cand)
        except json.JSONDecodeError:
            continue
    return None


def _first_balanced(text: str) -> str | None:
    start = text.find("{")
    if start < 0:
        return None
    depth = 0
    in_str = False
    escape = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_str:
            if escape:
                escape = False
            elif ch == "\\":
                escape = True
            elif ch == '"':
                in_str = False
            continue
        if ch == '"':
            in_str = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[start:i + 1]
    return None


def _validate_refine_map(parsed: Any, args: dict) -> list[str]:
    problems = []
    if not isinstance(parsed, dict):
        return ["top level must be a JSON object"]
    corrections = parsed.get("corrections")
    if not isinstance(corrections, dict):
        return ["required field 'corrections' must be an object mapping "
                "segment id to corrected text"]
    for key, value in corrections.items():
        if not isinstance(value, str):
            problems.append(f"correction for {key!r} must be a string")
    return problems


def _validate_eval_output(parsed: Any, args: dict) -> list[str]:
    problems = []
    if not isinstance(parsed, dict):
        return ["top level must be a JSON object"]
    located = parsed.get("located_utterances")
    if not isinstance(located, list):
        problems.append("'located_utterances' must be an array")
    else:
        for i, entry in enumerate(located):
            if not isinstance(entry, dict) or \
                    not isinstance(entry.get("segment_id"), str) or \
                    not isinstance(entry.get("quote"), str):
                problems.append(
                    f"located_utterances[{i}] needs string fields "
                    "'segment_id' and 'quote'")
    if not isinstance(parsed.get("observed"), bool):
        problems.append("'observed' must be a boolean")
    if not isinstance(parsed.get("rationale"), str):
        problems.append("'rationale' must be a string")
    suggestion = parsed.get("suggestion")
    if suggestion is not None and not isinstance(suggestion, str):
        problems.append("'suggestion' must be a string or null")
    return problems


SCHEMAS: dict[str, Callable[[Any, dict], list[str]]] = {
    "refine-map": _validate_refine_map,
    "eval-output": _validate_eval_output,
}


def validate_against_schema(schema_id: str, parsed: Any, args: dict) -> list[str]:
    try:
        validator = SCHEMAS[schema_id]
    except KeyError:
        raise KeyError(f"unknown response schema {schema_id!r}")
    return validator(parsed, args)
