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
    ValidationStatus,
)
from .validate import Violation, validate_transcript
from .serialize import (
    canonical_serialize,
    parse_annotation,
    parse_judgments,
    parse_rubric,
    parse_transcript,
)
from .types import Transcript

__all__ = [
    "AudioSession",
    "Evidence",
    "ExpertAnnotation",
    "Indicator",
    "IndicatorJudgment",
    "ItemScore",
    "Provenance",
    "Rubric",
    "RubricItem",
    "Scale",
    "ScaleSummary",
    "Segment",
    "SpeakerRole",
    "Transcript",
    "ValidationStatus",
    "Violation",
    "validate_transcript",
    "canonical_serialize",
    "parse_transcript",
    "parse_rubric",
    "parse_annotation",
    "parse_judgments",
]
