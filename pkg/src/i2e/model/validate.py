"""Structural validation for transcripts.

Violations are data, not exceptions: ingestion surfaces the full list to
the caller so a bad upload is rejected with every problem named at once.
"""

from __future__ import annotations

from dataclasses import dataclass

from .types import AudioSession, Provenance, Transcript


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str
    segment_id: str | None = None

    def __str__(self) -> str:
        if self.segment_id is not None:
            return f"{self.code}({self.segment_id}): {self.detail}"
        return f"{self.code}: {self.detail}"


def validate_transcript(
    t: Transcript,
    raw_parent: Transcript | None = None,
    session: AudioSession | None = None,
) -> list[Violation]:
    """Check all transcript/segment invariants; empty list means valid.

    When ``raw_parent`` is given, also checks the refinement invariant:
    the refined transcript must keep ids, order, speakers, and timestamps
    of its raw parent, differing in text only.
    """
    violations: list[Violation] = []

    seen_ids: set[str] = set()
    for seg in t.segments:
        if seg.id in seen_ids:
            violations.append(Violation("DuplicateId", "segment id reused", seg.id))
        seen_ids.add(seg.id)
        if seg.start_ms < 0:
            violations.append(
                Violation("NegativeStart", f"start_ms={seg.start_ms}", seg.id))
        if seg.end_ms <= seg.start_ms:
            violations.append(
                Violation("NonPositiveDuration",
                          f"start_ms={seg.start_ms}, end_ms={seg.end_ms}", seg.id))
        if not seg.text.strip():
            violations.append(Violation("EmptyText", "text empty after trim", seg.id))

    order_keys = [(seg.start_ms, seg.id) for seg in t.segments]
    if order_keys != sorted(order_keys):
        violations.append(
            Violation("OrderViolation",
                      "segments not sorted by start_ms (ties by id)"))

    if raw_parent is not None:
        violations.extend(_check_refinement(t, raw_parent))

    if session is not None:
        if t.session_id != session.session_id:
            violations.append(
                Violation("SessionMismatch",
                          f"transcript {t.session_id!r} vs session "
                          f"{session.session_id!r}"))
        if t.segments:
            last = max(seg.end_ms for seg in t.segments)
            if last > session.duration_ms:
                violations.append(
                    Violation("DurationExceeded",
                              f"max end_ms {last} > duration_ms "
                              f"{session.duration_ms}"))

    return violations


def _check_refinement(refined: Transcript, raw: Transcript) -> list[Violation]:
    violations: list[Violation] = []
    if refined.provenance != Provenance.REFINED:
        violations.append(
            Violation("ProvenanceMismatch",
                      f"expected refined, got {refined.provenance.value}"))
    if refined.session_id != raw.session_id:
        violations.append(
            Violation("SessionMismatch",
                      f"{refined.session_id!r} vs raw {raw.session_id!r}"))

    refined_ids = [seg.id for seg in refined.segments]
    raw_ids = [seg.id for seg in raw.segments]
    if set(refined_ids) != set(raw_ids) or len(refined_ids) != len(raw_ids):
        violations.append(
            Violation("SegmentSetMismatch",
                      f"raw has {len(raw_ids)} segments, refined {len(refined_ids)}; "
                      f"id sets {'differ' if set(refined_ids) != set(raw_ids) else 'match'}"))
        return violations
    if refined_ids != raw_ids:
        violations.append(Violation("OrderMismatch", "segment order changed"))
        return violations

    for ref_seg, raw_seg in zip(refined.segments, raw.segments):
        if ref_seg.speaker != raw_seg.speaker:
            violations.append(
                Violation("SpeakerMismatch",
                          f"{raw_seg.speaker.value} -> {ref_seg.speaker.value}",
                          ref_seg.id))
        if (ref_seg.start_ms, ref_seg.end_ms) != (raw_seg.start_ms, raw_seg.end_ms):
            violations.append(
                Violation("TimestampMismatch",
                          f"({raw_seg.start_ms},{raw_seg.end_ms}) -> "
                          f"({ref_seg.start_ms},{ref_seg.end_ms})",
                          ref_seg.id))
    return violations
