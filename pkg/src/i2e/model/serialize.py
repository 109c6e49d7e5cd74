"""Canonical JSON serialization for the domain types.

Field order is fixed and maps are emitted with sorted keys, so two
serializations of equal values are byte-identical and artifact hashes
are reproducible. Output is UTF-8 without ASCII escaping.
"""

from __future__ import annotations

import json
from typing import Any, Callable

from ..errors import ParseError
from .types import (
    AudioSession,
    Evidence,
    ExpertAnnotation,
    Indicator,
    IndicatorJudgment,
    ItemScore,
    Provenance,
    Rubric,
    RubricItem,
    Scale,
    ScaleSummary,
    Segment,
    SpeakerRole,
    Transcript,
    ValidationStatus,
)
from ..errors import InvariantViolation


def dumps_canonical(doc: Any) -> bytes:
    return json.dumps(
        doc, ensure_ascii=False, separators=(",", ":"), allow_nan=False
    ).encode("utf-8")


def loads_json(data: bytes | str) -> Any:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError("not valid UTF-8", offset=exc.start) from exc
    try:
        return json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, offset=exc.pos) from exc


# --- field access with path-tracked errors --------------------------------

def _get(d: Any, key: str, kind: type | tuple[type, ...], path: str) -> Any:
    if not isinstance(d, dict):
        raise ParseError(f"expected object, got {type(d).__name__}", path=path)
    if key not in d:
        raise ParseError(f"missing field {key!r}", path=path)
    value = d[key]
    if not isinstance(value, kind):
        raise ParseError(
            f"field {key!r} expected {_kind_name(kind)}, got {type(value).__name__}",
            path=f"{path}.{key}")
    return value


def _kind_name(kind: type | tuple[type, ...]) -> str:
    if isinstance(kind, tuple):
        return " or ".join(k.__name__ for k in kind)
    return kind.__name__


def _enum(value: str, enum_cls, path: str):
    try:
        return enum_cls(value)
    except ValueError:
        allowed = ", ".join(e.value for e in enum_cls)
        raise ParseError(f"expected one of [{allowed}], got {value!r}", path=path)


def _str_map(d: Any, path: str) -> dict[str, str]:
    if not isinstance(d, dict):
        raise ParseError(f"expected object, got {type(d).__name__}", path=path)
    out = {}
    for k in sorted(d):
        v = d[k]
        out[str(k)] = v if isinstance(v, str) else json.dumps(v, ensure_ascii=False)
    return out


# --- transcript ------------------------------------------------------------

def segment_to_dict(seg: Segment) -> dict:
    return {
        "id": seg.id,
        "speaker": seg.speaker.value,
        "start_ms": seg.start_ms,
        "end_ms": seg.end_ms,
        "text": seg.text,
    }


def segment_from_dict(d: Any, path: str = "$") -> Segment:
    return Segment(
        id=str(_get(d, "id", (str, int), path)),
        speaker=_enum(_get(d, "speaker", str, path), SpeakerRole, f"{path}.speaker"),
        start_ms=_get(d, "start_ms", int, path),
        end_ms=_get(d, "end_ms", int, path),
        text=_get(d, "text", str, path),
    )


def transcript_to_dict(t: Transcript) -> dict:
    doc = {
        "session_id": t.session_id,
        "provenance": t.provenance.value,
        "segments": [segment_to_dict(s) for s in t.segments],
    }
    if t.source_meta:
        doc["source_meta"] = {k: t.source_meta[k] for k in sorted(t.source_meta)}
    return doc


def transcript_from_dict(d: Any, path: str = "$") -> Transcript:
    segments_raw = _get(d, "segments", list, path)
    segments = tuple(
        segment_from_dict(seg, f"{path}.segments[{i}]")
        for i, seg in enumerate(segments_raw)
    )
    source_meta = {}
    if isinstance(d, dict) and "source_meta" in d:
        source_meta = _str_map(d["source_meta"], f"{path}.source_meta")
    return Transcript(
        session_id=str(_get(d, "session_id", (str, int), path)),
        provenance=_enum(_get(d, "provenance", str, path), Provenance,
                         f"{path}.provenance"),
        segments=segments,
        source_meta=source_meta,
    )


# --- rubric ----------------------------------------------------------------

def indicator_to_dict(ind: Indicator) -> dict:
    return {
        "id": ind.id,
        "scale": ind.scale.value,
        "item_id": ind.item_id,
        "level": ind.level,
        "description": ind.description,
        "positive_examples": list(ind.positive_examples),
        "negative_examples": list(ind.negative_examples),
        "language_accessible": ind.language_accessible,
    }


def indicator_from_dict(d: Any, path: str = "$") -> Indicator:
    return Indicator(
        id=_get(d, "id", str, path),
        scale=_enum(_get(d, "scale", str, path), Scale, f"{path}.scale"),
        item_id=_get(d, "item_id", str, path),
        level=_get(d, "level", int, path),
        description=_get(d, "description", str, path),
        positive_examples=tuple(_get(d, "positive_examples", list, path)),
        negative_examples=tuple(_get(d, "negative_examples", list, path)),
        language_accessible=_get(d, "language_accessible", bool, path),
    )


def rubric_item_to_dict(item: RubricItem) -> dict:
    return {
        "id": item.id,
        "scale": item.scale.value,
        "dimension": item.dimension,
        "title": item.title,
        "indicators": [indicator_to_dict(ind) for ind in item.indicators],
    }


def rubric_item_from_dict(d: Any, path: str = "$") -> RubricItem:
    indicators_raw = _get(d, "indicators", list, path)
    return RubricItem(
        id=_get(d, "id", str, path),
        scale=_enum(_get(d, "scale", str, path), Scale, f"{path}.scale"),
        dimension=_get(d, "dimension", str, path),
        title=_get(d, "title", str, path),
        indicators=tuple(
            indicator_from_dict(ind, f"{path}.indicators[{i}]")
            for i, ind in enumerate(indicators_raw)
        ),
    )


def rubric_to_dict(r: Rubric) -> dict:
    doc = {
        "scale": r.scale.value,
        "version": r.version,
        "items": [rubric_item_to_dict(item) for item in r.items],
    }
    if r.profile is not None:
        doc["profile"] = r.profile
    return doc


def rubric_from_dict(d: Any, path: str = "$") -> Rubric:
    items_raw = _get(d, "items", list, path)
    profile = d.get("profile") if isinstance(d, dict) else None
    if profile is not None and not isinstance(profile, str):
        raise ParseError("field 'profile' expected str", path=f"{path}.profile")
    return Rubric(
        scale=_enum(_get(d, "scale", str, path), Scale, f"{path}.scale"),
        version=_get(d, "version", str, path),
        items=tuple(
            rubric_item_from_dict(item, f"{path}.items[{i}]")
            for i, item in enumerate(items_raw)
        ),
        profile=profile,
    )


# --- judgments & annotations ------------------------------------------------

def judgment_to_dict(j: IndicatorJudgment) -> dict:
    return {
        "indicator_id": j.indicator_id,
        "observed": j.observed,
        "evidence": [{"segment_id": e.segment_id, "quote": e.quote}
                     for e in j.evidence],
        "rationale": j.rationale,
        "suggestion": j.suggestion,
        "validation": j.validation.value,
        "overridden_by": j.overridden_by,
        "model_meta": {k: j.model_meta[k] for k in sorted(j.model_meta)},
    }


def judgment_from_dict(d: Any, path: str = "$") -> IndicatorJudgment:
    evidence_raw = _get(d, "evidence", list, path)
    evidence = tuple(
        Evidence(
            segment_id=str(_get(e, "segment_id", (str, int),
                                f"{path}.evidence[{i}]")),
            quote=_get(e, "quote", str, f"{path}.evidence[{i}]"),
        )
        for i, e in enumerate(evidence_raw)
    )
    suggestion = d.get("suggestion")
    if suggestion is not None and not isinstance(suggestion, str):
        raise ParseError("field 'suggestion' expected str or null",
                         path=f"{path}.suggestion")
    overridden_by = d.get("overridden_by")
    if overridden_by is not None and not isinstance(overridden_by, str):
        raise ParseError("field 'overridden_by' expected str or null",
                         path=f"{path}.overridden_by")
    return IndicatorJudgment(
        indicator_id=_get(d, "indicator_id", str, path),
        observed=_get(d, "observed", bool, path),
        evidence=evidence,
        rationale=_get(d, "rationale", str, path),
        suggestion=suggestion,
        validation=_enum(_get(d, "validation", str, path), ValidationStatus,
                         f"{path}.validation"),
        overridden_by=overridden_by,
        model_meta=_str_map(d.get("model_meta", {}), f"{path}.model_meta"),
    )


def annotation_to_dict(a: ExpertAnnotation) -> dict:
    return {
        "session_id": a.session_id,
        "scale": a.scale.value,
        "assessor_id": a.assessor_id,
        "judgments": {k: int(a.judgments[k]) for k in sorted(a.judgments)},
    }


def annotation_from_dict(d: Any, path: str = "$") -> ExpertAnnotation:
    judgments_raw = _get(d, "judgments", dict, path)
    judgments: dict[str, bool] = {}
    for key in sorted(judgments_raw):
        value = judgments_raw[key]
        if isinstance(value, bool):
            judgments[key] = value
        elif value in (0, 1):
            judgments[key] = bool(value)
        else:
            raise ParseError(f"judgment must be 0 or 1, got {value!r}",
                             path=f"{path}.judgments.{key}")
    return ExpertAnnotation(
        session_id=str(_get(d, "session_id", (str, int), path)),
        scale=_enum(_get(d, "scale", str, path), Scale, f"{path}.scale"),
        judgments=judgments,
        assessor_id=str(_get(d, "assessor_id", (str, int), path)),
    )


# --- scores ------------------------------------------------------------------

def item_score_to_dict(s: ItemScore) -> dict:
    return {
        "item_id": s.item_id,
        "score": s.score,
        "satisfied_levels": list(s.satisfied_levels),
        "next_level_fraction": s.next_level_fraction,
    }


def item_score_from_dict(d: Any, path: str = "$") -> ItemScore:
    return ItemScore(
        item_id=_get(d, "item_id", str, path),
        score=_get(d, "score", int, path),
        satisfied_levels=tuple(_get(d, "satisfied_levels", list, path)),
        next_level_fraction=float(_get(d, "next_level_fraction", (int, float), path)),
    )


def scale_summary_to_dict(s: ScaleSummary) -> dict:
    return {
        "scale": s.scale.value,
        "per_item": [item_score_to_dict(i) for i in s.per_item],
        "per_dimension": {k: s.per_dimension[k] for k in sorted(s.per_dimension)},
        "overall_mean": s.overall_mean,
    }


def scale_summary_from_dict(d: Any, path: str = "$") -> ScaleSummary:
    return ScaleSummary(
        scale=_enum(_get(d, "scale", str, path), Scale, f"{path}.scale"),
        per_item=tuple(
            item_score_from_dict(i, f"{path}.per_item[{n}]")
            for n, i in enumerate(_get(d, "per_item", list, path))
        ),
        per_dimension={k: float(v)
                       for k, v in _get(d, "per_dimension", dict, path).items()},
        overall_mean=float(_get(d, "overall_mean", (int, float), path)),
    )


# --- dispatch ----------------------------------------------------------------

_TO_DICT: dict[type, Callable[[Any], Any]] = {
    Transcript: transcript_to_dict,
    Segment: segment_to_dict,
    Rubric: rubric_to_dict,
    RubricItem: rubric_item_to_dict,
    Indicator: indicator_to_dict,
    IndicatorJudgment: judgment_to_dict,
    ExpertAnnotation: annotation_to_dict,
    ItemScore: item_score_to_dict,
    ScaleSummary: scale_summary_to_dict,
}


def to_dict(x: Any) -> Any:
    try:
        converter = _TO_DICT[type(x)]
    except KeyError:
        raise TypeError(f"no canonical serialization for {type(x).__name__}")
    return converter(x)


def canonical_serialize(x: Any) -> bytes:
    """Deterministic UTF-8 JSON bytes for any core type (or list of them)."""
    if isinstance(x, (list, tuple)):
        return dumps_canonical([to_dict(item) for item in x])
    return dumps_canonical(to_dict(x))


def parse_transcript(data: bytes | str) -> Transcript:
    return transcript_from_dict(loads_json(data))


def parse_rubric(data: bytes | str) -> Rubric:
    """Parse and invariant-check a rubric file.

    Raises ParseError on malformed input and InvariantViolation on
    structural breaches (duplicate ids, bad levels, profile count
    mismatch).
    """
    doc = loads_json(data)
    try:
        return rubric_from_dict(doc)
    except InvariantViolation:
        raise


def parse_annotation(data: bytes | str) -> ExpertAnnotation:
    return annotation_from_dict(loads_json(data))


def parse_judgments(data: bytes | str) -> list[IndicatorJudgment]:
    doc = loads_json(data)
    if not isinstance(doc, list):
        raise ParseError(f"expected array, got {type(doc).__name__}")
    return [judgment_from_dict(d, f"$[{i}]") for i, d in enumerate(doc)]
