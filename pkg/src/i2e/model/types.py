"""Canonical domain types.

Everything here is an immutable value object: safe to share between
threads and to use as the unit of persistence. Text fields are
NFC-normalized on construction. Types whose consumers inspect problems
as data (Transcript, Segment) accept structurally dubious values and
leave flagging to ``validate.validate_transcript``; configuration and
rubric types raise ``InvariantViolation`` eagerly instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from ..errors import InvariantViolation
from ..textnorm import nfc


class SpeakerRole(str, Enum):
    TEACHER = "teacher"
    CHILD = "child"
    UNKNOWN = "unknown"


class Provenance(str, Enum):
    RAW = "raw"
    REFINED = "refined"


class Scale(str, Enum):
    ECQRS_EC = "ecqrs_ec"
    SSTEW = "sstew"


class ValidationStatus(str, Enum):
    VALID = "valid"
    FLAGGED_NO_EVIDENCE = "flagged_no_evidence"
    FLAGGED_QUOTE_MISMATCH = "flagged_quote_mismatch"
    OVERRIDDEN = "overridden"

    @property
    def is_flagged(self) -> bool:
        return self in (
            ValidationStatus.FLAGGED_NO_EVIDENCE,
            ValidationStatus.FLAGGED_QUOTE_MISMATCH,
        )


# Item/indicator levels allowed by the four-step quality ladder.
LEVELS = (1, 3, 5, 7)

# Item/indicator counts a rubric file must declare when it claims the
# standard profile used for full-scale assessments.
STANDARD_PROFILE_COUNTS = {
    Scale.ECQRS_EC: (17, 112),
    Scale.SSTEW: (14, 94),
}


@dataclass(frozen=True)
class Segment:
    """One role-labeled, time-stamped utterance."""

    id: str
    speaker: SpeakerRole
    start_ms: int
    end_ms: int
    text: str

    def __post_init__(self):
        object.__setattr__(self, "text", nfc(self.text))


@dataclass(frozen=True)
class Transcript:
    session_id: str
    provenance: Provenance
    segments: tuple[Segment, ...]
    source_meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    def segment_by_id(self, segment_id: str) -> Segment | None:
        for seg in self.segments:
            if seg.id == segment_id:
                return seg
        return None

    def with_texts(self, texts: dict[str, str], provenance: Provenance,
                   source_meta: dict[str, str] | None = None) -> "Transcript":
        """Copy keeping ids/order/speakers/timestamps, replacing only text."""
        new_segments = tuple(
            Segment(s.id, s.speaker, s.start_ms, s.end_ms, texts.get(s.id, s.text))
            for s in self.segments
        )
        return Transcript(self.session_id, provenance, new_segments,
                          dict(source_meta if source_meta is not None else self.source_meta))


@dataclass(frozen=True)
class AudioSession:
    session_id: str
    duration_ms: int
    classroom_meta: dict[str, str] = field(default_factory=dict)
    audio_uri: str | None = None

    def __post_init__(self):
        if self.duration_ms <= 0:
            raise InvariantViolation(
                f"session {self.session_id!r}: duration_ms must be > 0"
            )


@dataclass(frozen=True)
class Indicator:
    """Atomic assessable behavior attached to one level of a rubric item."""

    id: str
    scale: Scale
    item_id: str
    level: int
    description: str
    positive_examples: tuple[str, ...] = ()
    negative_examples: tuple[str, ...] = ()
    language_accessible: bool = True

    def __post_init__(self):
        if self.level not in LEVELS:
            raise InvariantViolation(
                f"indicator {self.id!r}: level must be one of {LEVELS}, got {self.level}"
            )
        object.__setattr__(self, "description", nfc(self.description))
        object.__setattr__(self, "positive_examples",
                           tuple(nfc(x) for x in self.positive_examples))
        object.__setattr__(self, "negative_examples",
                           tuple(nfc(x) for x in self.negative_examples))


@dataclass(frozen=True)
class RubricItem:
    id: str
    scale: Scale
    dimension: str
    title: str
    indicators: tuple[Indicator, ...]

    def __post_init__(self):
        object.__setattr__(self, "indicators", tuple(self.indicators))
        if not self.indicators:
            raise InvariantViolation(f"item {self.id!r}: no indicators")
        levels = [ind.level for ind in self.indicators]
        if levels != sorted(levels):
            raise InvariantViolation(
                f"item {self.id!r}: indicators must be grouped by ascending level"
            )
        for ind in self.indicators:
            if ind.item_id != self.id:
                raise InvariantViolation(
                    f"indicator {ind.id!r} declares item {ind.item_id!r}, "
                    f"listed under {self.id!r}"
                )

    def levels_present(self) -> list[int]:
        out: list[int] = []
        for ind in self.indicators:
            if ind.level not in out:
                out.append(ind.level)
        return out

    def indicators_at(self, level: int) -> list[Indicator]:
        return [ind for ind in self.indicators if ind.level == level]

    def accessible_indicators(self) -> list[Indicator]:
        return [ind for ind in self.indicators if ind.language_accessible]


@dataclass(frozen=True)
class Rubric:
    scale: Scale
    version: str
    items: tuple[RubricItem, ...]
    # "standard" marks the full-scale configuration; counts are then enforced.
    profile: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        seen: set[str] = set()
        for item in self.items:
            if item.scale != self.scale:
                raise InvariantViolation(
                    f"item {item.id!r} declares scale {item.scale.value}, "
                    f"rubric is {self.scale.value}"
                )
            for ind in item.indicators:
                if ind.id in seen:
                    raise InvariantViolation(f"duplicate indicator id {ind.id!r}")
                seen.add(ind.id)
        if self.profile == "standard":
            want_items, want_indicators = STANDARD_PROFILE_COUNTS[self.scale]
            n_items, n_indicators = len(self.items), len(seen)
            if (n_items, n_indicators) != (want_items, want_indicators):
                raise InvariantViolation(
                    f"{self.scale.value} standard profile declares "
                    f"{want_items} items / {want_indicators} indicators, "
                    f"file has {n_items} / {n_indicators}"
                )

    def all_indicators(self) -> list[Indicator]:
        return [ind for item in self.items for ind in item.indicators]

    def indicator_by_id(self, indicator_id: str) -> Indicator | None:
        for ind in self.all_indicators():
            if ind.id == indicator_id:
                return ind
        return None

    def dimension_of(self, indicator_id: str) -> str | None:
        for item in self.items:
            for ind in item.indicators:
                if ind.id == indicator_id:
                    return item.dimension
        return None


@dataclass(frozen=True)
class Evidence:
    segment_id: str
    quote: str

    def __post_init__(self):
        object.__setattr__(self, "quote", nfc(self.quote))


@dataclass(frozen=True)
class IndicatorJudgment:
    indicator_id: str
    observed: bool
    evidence: tuple[Evidence, ...] = ()
    rationale: str = ""
    suggestion: str | None = None
    validation: ValidationStatus = ValidationStatus.VALID
    overridden_by: str | None = None
    model_meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "evidence", tuple(self.evidence))
        if self.validation == ValidationStatus.OVERRIDDEN and not self.overridden_by:
            raise InvariantViolation(
                f"judgment {self.indicator_id!r}: overridden without overridden_by"
            )


@dataclass(frozen=True)
class ItemScore:
    item_id: str
    score: int
    satisfied_levels: tuple[int, ...]
    next_level_fraction: float

    def __post_init__(self):
        if not 1 <= self.score <= 7:
            raise InvariantViolation(
                f"item {self.item_id!r}: score {self.score} outside 1..7"
            )
        if not 0.0 <= self.next_level_fraction <= 1.0:
            raise InvariantViolation(
                f"item {self.item_id!r}: next_level_fraction outside [0, 1]"
            )


@dataclass(frozen=True)
class ScaleSummary:
    scale: Scale
    per_item: tuple[ItemScore, ...]
    per_dimension: dict[str, float]
    overall_mean: float


@dataclass(frozen=True)
class ExpertAnnotation:
    session_id: str
    scale: Scale
    judgments: dict[str, bool]
    assessor_id: str

    def check_against(self, rubric: Rubric) -> None:
        """Raise if any judged id is unknown to the rubric of this scale."""
        known = {ind.id for ind in rubric.all_indicators()}
        unknown = sorted(set(self.judgments) - known)
        if unknown:
            raise InvariantViolation(
                f"annotation references unknown indicator ids: {', '.join(unknown)}"
            )
