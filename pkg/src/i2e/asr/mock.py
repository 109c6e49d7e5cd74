"""Deterministic mock ASR backend driven by utterance fixtures.

A fixture declares gold utterances plus injected recognition errors
drawn from the observed taxonomy (homophone swaps, extra words,
omissions, speaker flips, punctuation damage, segment splits). The
mock returns the corrupted transcript together with the injection
manifest, so metric tests know exact ground truth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..errors import AudioUnreadable, InvalidFixture, MalformedBackendResponse
from ..model import AudioSession, Provenance, Segment, SpeakerRole, Transcript
from .gateway import AsrBackendConfig, AsrResult, _checked, map_speaker_label

CATEGORIES = (
    "homophone",
    "extra_words",
    "omission",
    "speaker_flip",
    "punctuation",
    "other_substitution",
    "segmentation",
)


@dataclass(frozen=True)
class InjectedError:
    segment_id: str
    category: str
    detail: str


@dataclass
class MockAsrOutput:
    result: AsrResult
    gold: Transcript
    manifest: list[InjectedError]


def load_fixture(path: str | Path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise AudioUnreadable(f"cannot read fixture {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise InvalidFixture(f"fixture {path} is not valid JSON: {exc}")


def mock_transcribe(fixture: dict) -> MockAsrOutput:
    """Corrupt the fixture's gold utterances per its injection list."""
    if not isinstance(fixture, dict) or "utterances" not in fixture:
        raise InvalidFixture("fixture needs an 'utterances' list")
    session_id = str(fixture.get("session_id", ""))
    if not session_id:
        raise InvalidFixture("fixture needs a session_id")

    gold_segments: list[Segment] = []
    hyp_segments: list[Segment] = []
    manifest: list[InjectedError] = []
    seen_ids: set[str] = set()

    for i, utt in enumerate(fixture["utterances"]):
        seg_id = str(utt.get("id", f"seg{i + 1}"))
        if seg_id in seen_ids:
            raise InvalidFixture(f"duplicate utterance id {seg_id!r}")
        seen_ids.add(seg_id)
        try:
            speaker = map_speaker_label(str(utt["speaker"]))
            start_ms = int(utt["start_ms"])
            end_ms = int(utt["end_ms"])
            gold_text = str(utt["gold_text"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidFixture(f"utterance {seg_id!r}: {exc}")

        gold_segments.append(Segment(seg_id, speaker, start_ms, end_ms, gold_text))

        injections = utt.get("inject") or []
        if isinstance(injections, dict):
            injections = [injections]
        text = gold_text
        role = speaker
        split_at: int | None = None
        for inj in injections:
            category = inj.get("category")
            if category not in CATEGORIES:
                raise InvalidFixture(
                    f"utterance {seg_id!r}: unknown category {category!r}")
            text, role, split_at, detail = _apply(
                seg_id, category, inj, text, role, split_at)
            manifest.append(InjectedError(seg_id, category, detail))

        if split_at is not None:
            if not 0 < split_at < len(text):
                raise InvalidFixture(
                    f"utterance {seg_id!r}: split_at outside text")
            mid_ms = start_ms + max(1, (end_ms - start_ms) // 2)
            hyp_segments.append(
                Segment(f"{seg_id}a", role, start_ms, mid_ms, text[:split_at]))
            hyp_segments.append(
                Segment(f"{seg_id}b", role, mid_ms, end_ms, text[split_at:]))
        else:
            hyp_segments.append(Segment(seg_id, role, start_ms, end_ms, text))

    gold = Transcript(session_id, Provenance.RAW, tuple(gold_segments),
                      {"asr_backend": "mock", "kind": "gold"})
    hyp = Transcript(session_id, Provenance.RAW, tuple(hyp_segments),
                     {"asr_backend": "mock",
                      "injected_errors": str(len(manifest))})
    result = _checked(hyp, latency_ms=0, warnings=[])
    return MockAsrOutput(result=result, gold=gold, manifest=manifest)


def _apply(seg_id: str, category: str, inj: dict, text: str,
           role: SpeakerRole, split_at: int | None):
    """Apply one injection; returns (text, role, split_at, detail)."""
    if category in ("homophone", "other_substitution"):
        src, dst = inj.get("from"), inj.get("to")
        if not src or dst is None:
            raise InvalidFixture(f"{seg_id}: substitution needs 'from' and 'to'")
        if src not in text:
            raise InvalidFixture(f"{seg_id}: {src!r} not present in gold text")
        return text.replace(src, dst, 1), role, split_at, f"{src}->{dst}"
    if category == "extra_words":
        insert = inj.get("insert")
        if not insert:
            raise InvalidFixture(f"{seg_id}: extra_words needs 'insert'")
        after = inj.get("after", "")
        pos = 0
        if after:
            idx = text.find(after)
            if idx < 0:
                raise InvalidFixture(f"{seg_id}: {after!r} not present in gold text")
            pos = idx + len(after)
        return text[:pos] + insert + text[pos:], role, split_at, f"+{insert}"
    if category == "omission":
        drop = inj.get("drop")
        if not drop or drop not in text:
            raise InvalidFixture(f"{seg_id}: omission needs a present 'drop'")
        return text.replace(drop, "", 1), role, split_at, f"-{drop}"
    if category == "punctuation":
        src, dst = inj.get("from"), inj.get("to", "")
        if not src or src not in text:
            raise InvalidFixture(f"{seg_id}: punctuation needs a present 'from'")
        return text.replace(src, dst, 1), role, split_at, f"{src}->{dst or '∅'}"
    if category == "speaker_flip":
        flipped = (SpeakerRole.CHILD if role == SpeakerRole.TEACHER
                   else SpeakerRole.TEACHER)
        return text, flipped, split_at, f"{role.value}->{flipped.value}"
    if category == "segmentation":
        at = inj.get("split_at")
        if not isinstance(at, int):
            raise InvalidFixture(f"{seg_id}: segmentation needs integer 'split_at'")
        return text, role, at, f"split@{at}"
    raise InvalidFixture(f"unhandled category {category!r}")


def mock_backend_transcribe(session: AudioSession,
                            cfg: AsrBackendConfig) -> AsrResult:
    """Gateway entry for ``mock:`` endpoints.

    The fixture path comes from the endpoint (``mock:/path.json``) or,
    when the endpoint is bare ``mock:``, from the session's audio_uri.
    """
    path = cfg.endpoint_url[len("mock:"):] or session.audio_uri
    if not path:
        raise AudioUnreadable(
            f"session {session.session_id!r}: no fixture path for mock ASR")
    fixture = load_fixture(path)
    out = mock_transcribe(fixture)
    if out.result.transcript.session_id != session.session_id:
        raise MalformedBackendResponse(
            f"fixture session {out.result.transcript.session_id!r} does not "
            f"match requested session {session.session_id!r}")
    return out.result
