"""Workflow efficiency model: observed/automated stage times against the
traditional in-person assessment baseline."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ZeroAutomatedTime


@dataclass(frozen=True)
class TraditionalTimings:
    observation_min: float
    coding_min: float
    reporting_min: float

    def total(self) -> float:
        return self.observation_min + self.coding_min + self.reporting_min


@dataclass(frozen=True)
class AutomatedTimings:
    audio_processing_min: float
    transcribe_refine_min: float
    evaluate_report_min: float

    def total(self) -> float:
        return (self.audio_processing_min + self.transcribe_refine_min
                + self.evaluate_report_min)


@dataclass(frozen=True)
class WorkflowTimings:
    traditional: TraditionalTimings
    automated: AutomatedTimings

    def __post_init__(self):
        components = (
            self.traditional.observation_min, self.traditional.coding_min,
            self.traditional.reporting_min,
            self.automated.audio_processing_min,
            self.automated.transcribe_refine_min,
            self.automated.evaluate_report_min,
        )
        if any(c < 0 for c in components):
            raise ValueError("timing components must be >= 0")

    @classmethod
    def from_dict(cls, doc: dict) -> "WorkflowTimings":
        t, a = doc["traditional"], doc["automated"]
        return cls(
            traditional=TraditionalTimings(
                observation_min=float(t["observation_min"]),
                coding_min=float(t["coding_min"]),
                reporting_min=float(t["reporting_min"]),
            ),
            automated=AutomatedTimings(
                audio_processing_min=float(a["audio_processing_min"]),
                transcribe_refine_min=float(a["transcribe_refine_min"]),
                evaluate_report_min=float(a["evaluate_report_min"]),
            ),
        )


@dataclass
class EfficiencyReport:
    total_traditional_min: float
    total_automated_min: float
    speedup: float
    speedup_label: str

    def hours_at(self, n_classrooms: int) -> tuple[float, float]:
        """(traditional_hours, automated_hours) for n classrooms."""
        return (n_classrooms * self.total_traditional_min / 60.0,
                n_classrooms * self.total_automated_min / 60.0)

    def to_dict(self) -> dict:
        return {
            "total_traditional_min": self.total_traditional_min,
            "total_automated_min": self.total_automated_min,
            "speedup": self.speedup,
            "speedup_label": self.speedup_label,
        }


def efficiency_gain(t: WorkflowTimings) -> EfficiencyReport:
    total_traditional = t.traditional.total()
    total_automated = t.automated.total()
    if total_automated <= 0:
        raise ZeroAutomatedTime("automated workflow total must be > 0")
    if total_traditional <= 0:
        raise ValueError("traditional workflow total must be > 0")
    speedup = total_traditional / total_automated
    return EfficiencyReport(
        total_traditional_min=total_traditional,
        total_automated_min=total_automated,
        speedup=speedup,
        speedup_label=f"{round(speedup)}×",
    )
