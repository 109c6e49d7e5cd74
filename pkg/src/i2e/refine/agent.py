"""Context-aware transcript correction.

The model sees one window at a time and must answer with a map keyed by
segment id, text-only edits. Keying by id makes realignment with the
original timestamps and speaker labels trivially verifiable; any window
whose reply breaks the id contract is rejected whole and keeps its raw
text — a model that mangles ids is not trusted for that window.
"""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from ..errors import CoverageGap, DuplicateCorrection, InvariantViolation
from ..llm.client import LlmBackend, LlmRequest, complete
from ..model import Provenance, Transcript
from ..model.validate import validate_transcript
from .lexicon import HomophoneLexicon
from .windows import Window, WindowPlan, plan_windows, render_segment_line

REJECT_ID_SET_MISMATCH = "IdSetMismatch"
REJECT_SPEAKER_LABEL_EDIT = "SpeakerLabelEdit"
REJECT_EMPTY_TEXT = "EmptyText"
REJECT_PARSE_FAILURE = "ParseFailure"

# A correction that re-emits a "[id|speaker]" header is trying to edit
# attribution, which is out of bounds.
_HEADER_PATTERN = re.compile(r"^\s*\[[^|\]]+\|[^\]]+\]")

SYSTEM_PROMPT = (
    "You are a careful transcript corrector for preschool classroom "
    "recordings. The input is preschool classroom speech transcribed by "
    "ASR and likely contains homophone errors common in educational "
    "settings. Correct recognition errors while preserving the original "
    "meaning and speaker attributions. Never merge, split, reorder, or "
    "re-attribute utterances; edit text only."
)


@dataclass(frozen=True)
class RefineParams:
    window_size: int = 30
    context_size: int = 5
    token_budget: int = 6000
    repair_retries: int = 2
    concurrency: int = 4


@dataclass
class WindowCorrection:
    window_index: int
    correctable_ids: tuple[str, ...]
    corrections: dict[str, str] = field(default_factory=dict)
    rejected: bool = False
    reject_reason: str | None = None
    llm_retries: int = 0


@dataclass
class RefineAudit:
    session_id: str
    total_windows: int
    rejected_windows: int
    changed_segment_ids: list[str]
    windows: list[dict]
    model_id: str

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "total_windows": self.total_windows,
            "rejected_windows": self.rejected_windows,
            "changed_segment_ids": list(self.changed_segment_ids),
            "windows": list(self.windows),
            "model_id": self.model_id,
        }


def build_refine_prompt(window: Window, t: Transcript,
                        lexicon: HomophoneLexicon) -> LlmRequest:
    by_id = {s.id: s for s in t.segments}

    if lexicon.entries:
        pair_lines = [
            f'- {e.wrong} → {e.right} ({e.pinyin}): "{e.gloss_wrong}" vs "{e.gloss_right}"'
            for e in lexicon.entries
        ]
        lexicon_block = "Known confusion pairs:\n" + "\n".join(pair_lines)
    else:
        lexicon_block = "No confusion pairs provided."

    lines = [render_segment_line(by_id[sid], read_only=True)
             for sid in window.context_before_ids]
    lines += [render_segment_line(by_id[sid]) for sid in window.correctable_ids]
    lines += [render_segment_line(by_id[sid], read_only=True)
              for sid in window.context_after_ids]

    id_list = ", ".join(window.correctable_ids)
    user_prompt = (
        f"{lexicon_block}\n\n"
        "Transcript window (lines marked [read-only] are context; "
        "do not correct them):\n"
        + "\n".join(lines)
        + "\n\nReturn JSON only: "
        '{"corrections": {"<segment_id>": "<corrected text>"}}\n'
        f"Provide exactly one entry for each of these segment ids: {id_list}.\n"
        "Keep the text unchanged where no correction is needed."
    )
    return LlmRequest(
        system_prompt=SYSTEM_PROMPT,
        user_prompt=user_prompt,
        response_schema_id="refine-map",
        schema_args={"allowed_ids": list(window.correctable_ids)},
        temperature=0.0,
    )


def check_window_reply(window: Window, parsed: dict | None,
                       retries: int) -> WindowCorrection:
    """Classify a model reply: accepted map or whole-window rejection."""
    wc = WindowCorrection(window_index=window.index,
                          correctable_ids=window.correctable_ids,
                          llm_retries=retries)
    if parsed is None:
        wc.rejected = True
        wc.reject_reason = REJECT_PARSE_FAILURE
        return wc
    corrections = parsed.get("corrections", {})
    if set(corrections) != set(window.correctable_ids):
        wc.rejected = True
        wc.reject_reason = REJECT_ID_SET_MISMATCH
        return wc
    for text in corrections.values():
        if not text.strip():
            wc.rejected = True
            wc.reject_reason = REJECT_EMPTY_TEXT
            return wc
        if _HEADER_PATTERN.match(text):
            wc.rejected = True
            wc.reject_reason = REJECT_SPEAKER_LABEL_EDIT
            return wc
    wc.corrections = dict(corrections)
    return wc


def apply_corrections(t_raw: Transcript,
                      corrections: list[WindowCorrection]) -> Transcript:
    """Fold accepted window corrections back onto the raw structure.

    Output keeps ids, order, speakers, and timestamps of the raw
    transcript; only text changes, and only inside accepted windows.
    """
    raw_ids = [s.id for s in t_raw.segments]
    covered: set[str] = set()
    for wc in corrections:
        for sid in wc.correctable_ids:
            if sid in covered:
                raise DuplicateCorrection(f"segment {sid!r} corrected twice")
            covered.add(sid)
    missing = [sid for sid in raw_ids if sid not in covered]
    if missing:
        raise CoverageGap(f"segments not covered by any window: {missing}")

    texts: dict[str, str] = {}
    rejected_indices: list[int] = []
    for wc in corrections:
        effective_rejected = wc.rejected or (
            set(wc.corrections) != set(wc.correctable_ids))
        if effective_rejected:
            rejected_indices.append(wc.window_index)
            continue
        for sid in wc.correctable_ids:
            texts[sid] = wc.corrections[sid].replace("\n", " ")

    source_meta = dict(t_raw.source_meta)
    source_meta["refine_rejected_windows"] = ",".join(
        str(i) for i in sorted(rejected_indices))
    return t_raw.with_texts(texts, Provenance.REFINED, source_meta)


def refine(t_raw: Transcript, lexicon: HomophoneLexicon, backend: LlmBackend,
           params: RefineParams = RefineParams()) -> tuple[Transcript, RefineAudit]:
    """Window, correct, and realign a raw transcript.

    Rejected windows degrade gracefully to their raw text; only invalid
    input or a backend that hard-fails every retry aborts the run.
    """
    if t_raw.provenance != Provenance.RAW:
        raise InvariantViolation("refine expects a raw transcript")
    violations = validate_transcript(t_raw)
    if violations:
        raise InvariantViolation(
            "raw transcript invalid: " + "; ".join(str(v) for v in violations))

    plan = plan_windows(t_raw, params.window_size, params.context_size,
                        params.token_budget)

    def run_window(window: Window) -> tuple[WindowCorrection, str]:
        req = build_refine_prompt(window, t_raw, lexicon)
        resp = complete(req, backend, repair_retries=params.repair_retries)
        parsed = resp.parsed if resp.ok else None
        return check_window_reply(window, parsed, resp.repair_retries), resp.model_id

    model_id = ""
    results: list[WindowCorrection] = [None] * len(plan.windows)  # type: ignore[list-item]
    max_workers = max(1, min(params.concurrency, len(plan.windows)))
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        for window, (wc, mid) in zip(plan.windows,
                                     pool.map(run_window, plan.windows)):
            results[window.index] = wc
            model_id = mid or model_id

    refined = apply_corrections(t_raw, results)

    raw_texts = {s.id: s.text for s in t_raw.segments}
    changed = [s.id for s in refined.segments if s.text != raw_texts[s.id]]
    window_entries = []
    for wc in results:
        window_entries.append({
            "index": wc.window_index,
            "correctable_ids": list(wc.correctable_ids),
            "accepted": not wc.rejected,
            "reject_reason": wc.reject_reason,
            "llm_retries": wc.llm_retries,
            "changed_ids": [sid for sid in wc.correctable_ids if sid in changed],
        })
    audit = RefineAudit(
        session_id=t_raw.session_id,
        total_windows=len(plan.windows),
        rejected_windows=sum(1 for wc in results if wc.rejected),
        changed_segment_ids=changed,
        windows=window_entries,
        model_id=model_id,
    )
    return refined, audit
