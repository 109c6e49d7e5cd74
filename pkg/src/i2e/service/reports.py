"""Assessment report assembly.

The report is the deliverable teachers read: per-item scores with every
indicator's verdict, the exact quotes (with segment ids and timestamps)
supporting each one, rationales and suggestions, plus scale summaries
and the workflow-efficiency block. Items containing unresolved flagged
judgments are marked provisional; their scores surface for context but
await expert review.
"""

from __future__ import annotations

from ..errors import ZeroAutomatedTime
from ..metrics.efficiency import (
    AutomatedTimings,
    TraditionalTimings,
    WorkflowTimings,
    efficiency_gain,
)
from ..model import (
    IndicatorJudgment,
    Rubric,
    ScaleSummary,
    Transcript,
)
from ..model.serialize import item_score_to_dict
from .store import JobState


def build_report(session_id: str,
                 per_scale: dict[str, tuple[Rubric, list[IndicatorJudgment], ScaleSummary]],
                 transcript: Transcript,
                 state: JobState,
                 traditional: TraditionalTimings) -> dict:
    scales = {}
    flagged_total = 0
    overridden_total = 0
    for key in sorted(per_scale):
        rubric, judgments, summary = per_scale[key]
        by_id = {j.indicator_id: j for j in judgments}
        items = []
        scores = {s.item_id: s for s in summary.per_item}
        for item in rubric.items:
            accessible = item.accessible_indicators()
            if not accessible:
                continue
            indicator_entries = []
            provisional = False
            for ind in accessible:
                j = by_id.get(ind.id)
                if j is None:
                    continue
                needs_review = j.validation.is_flagged
                provisional = provisional or needs_review
                flagged_total += 1 if needs_review else 0
                overridden_total += 1 if j.overridden_by else 0
                indicator_entries.append(_indicator_entry(ind, j, transcript,
                                                          needs_review))
            score = scores[item.id]
            items.append({
                "item_id": item.id,
                "title": item.title,
                "dimension": item.dimension,
                "score": score.score,
                "satisfied_levels": list(score.satisfied_levels),
                "next_level_fraction": score.next_level_fraction,
                "provisional": provisional,
                "indicators": indicator_entries,
            })
        scales[key] = {
            "scale": rubric.scale.value,
            "rubric_version": rubric.version,
            "items": items,
            "per_dimension": {k: summary.per_dimension[k]
                              for k in sorted(summary.per_dimension)},
            "overall_mean": summary.overall_mean,
            "item_scores": [item_score_to_dict(s) for s in summary.per_item],
        }
    return {
        "session_id": session_id,
        "transcript_provenance": transcript.provenance.value,
        "scales": scales,
        "flags": {"needs_expert_review": flagged_total,
                  "overridden": overridden_total},
        "efficiency": _efficiency_block(state, traditional),
    }


def _indicator_entry(ind, j: IndicatorJudgment, transcript: Transcript,
                     needs_review: bool) -> dict:
    evidence = []
    for ev in j.evidence:
        segment = transcript.segment_by_id(ev.segment_id)
        evidence.append({
            "segment_id": ev.segment_id,
            "quote": ev.quote,
            "start_ms": segment.start_ms if segment else None,
            "end_ms": segment.end_ms if segment else None,
        })
    return {
        "indicator_id": ind.id,
        "level": ind.level,
        "description": ind.description,
        "observed": j.observed,
        "validation": j.validation.value,
        "needs_expert_review": needs_review,
        "evidence": evidence,
        "rationale": j.rationale,
        "suggestion": j.suggestion,
        "overridden_by": j.overridden_by,
    }


def render_report_text(report: dict) -> str:
    """Plain-text rendering of a report document, for download/printing."""
    lines = [f"Assessment report — session {report['session_id']}",
             f"transcript: {report['transcript_provenance']}", ""]
    for key in sorted(report["scales"]):
        scale = report["scales"][key]
        lines.append(f"== {scale['scale']} "
                     f"(rubric {scale['rubric_version']}) ==")
        lines.append(f"overall mean: {scale['overall_mean']:.2f}")
        for dim in sorted(scale["per_dimension"]):
            lines.append(f"  {dim}: {scale['per_dimension'][dim]:.2f}")
        for item in scale["items"]:
            tag = " [provisional]" if item["provisional"] else ""
            lines.append("")
            lines.append(f"* {item['item_id']} — {item['title']}: "
                         f"score {item['score']}{tag}")
            for ind in item["indicators"]:
                if ind["needs_expert_review"]:
                    mark = "?"
                elif ind["observed"]:
                    mark = "+"
                else:
                    mark = "-"
                lines.append(f"    [{mark}] {ind['indicator_id']} (L{ind['level']})")
                for ev in ind["evidence"]:
                    stamp = ""
                    if ev["start_ms"] is not None:
                        stamp = f" @{_mmss(ev['start_ms'])}"
                    lines.append(f'        "{ev["quote"]}" '
                                 f"({ev['segment_id']}{stamp})")
                if ind["suggestion"]:
                    lines.append(f"        suggestion: {ind['suggestion']}")
        lines.append("")
    flags = report["flags"]
    lines.append(f"flags: {flags['needs_expert_review']} awaiting review, "
                 f"{flags['overridden']} overridden")
    eff = report["efficiency"]
    lines.append(f"traditional workflow: {eff['traditional_min']['total']:g} min; "
                 f"automated observed: {eff['automated_observed_min']['total']:g} min")
    if eff.get("speedup_label"):
        lines.append(f"speedup: {eff['speedup_label']}")
    elif eff.get("note"):
        lines.append(f"speedup: n/a ({eff['note']})")
    return "\n".join(lines) + "\n"


def _mmss(ms: int) -> str:
    seconds = ms // 1000
    return f"{seconds // 60:02d}:{seconds % 60:02d}"


def _efficiency_block(state: JobState, traditional: TraditionalTimings) -> dict:
    """Observed automated stage times against the traditional baseline.

    Stage times are reported at whole-minute resolution (the model's
    unit); when the automated total rounds to zero — as it does under
    mock backends — the speedup is reported as undefined rather than
    inflated.
    """
    to_min = lambda ms: round(ms / 60_000.0)
    observed = AutomatedTimings(
        audio_processing_min=to_min(state.stage_ms.get("transcribing", 0)),
        transcribe_refine_min=to_min(state.stage_ms.get("refining", 0)),
        evaluate_report_min=to_min(state.stage_ms.get("evaluating", 0)
                                   + state.stage_ms.get("scoring", 0)),
    )
    block = {
        "traditional_min": {
            "observation_min": traditional.observation_min,
            "coding_min": traditional.coding_min,
            "reporting_min": traditional.reporting_min,
            "total": traditional.total(),
        },
        "automated_observed_min": {
            "audio_processing_min": observed.audio_processing_min,
            "transcribe_refine_min": observed.transcribe_refine_min,
            "evaluate_report_min": observed.evaluate_report_min,
            "total": observed.total(),
        },
    }
    try:
        report = efficiency_gain(WorkflowTimings(traditional=traditional,
                                                 automated=observed))
        block["speedup"] = report.speedup
        block["speedup_label"] = report.speedup_label
    except ZeroAutomatedTime:
        block["speedup"] = None
        block["speedup_label"] = None
        block["note"] = "observed automated time below timing resolution"
    return block
