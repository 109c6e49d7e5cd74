"""Evidence-grounded indicator evaluation.

One model call per indicator: the prompt carries the indicator
definition with contrastive examples and the full refined transcript,
and demands an evidence-first reply — locate utterances, decide
presence, justify. Every observed=true reply must quote its cited
segments verbatim; anything else is flagged for expert review rather
than silently accepted, because fabricated evidence is the failure
mode this check exists to catch.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from ..errors import (
    AuthFailure,
    BackendUnavailable,
    InvariantViolation,
    SessionEvalFailed,
)
from ..llm.client import LlmBackend, LlmRequest, complete
from ..llm.tokens import estimate_tokens
from ..model import (
    Evidence,
    Indicator,
    IndicatorJudgment,
    Provenance,
    Rubric,
    Transcript,
    ValidationStatus,
)
from ..refine.windows import render_segment_line

logger = logging.getLogger(__name__)

SYSTEM_PROMPT = (
    "You assess teacher-child interaction quality from classroom "
    "transcripts. Judge exactly one behavioral indicator at a time. "
    "Reason evidence-first: (1) locate the utterances relevant to the "
    "indicator, (2) decide whether the behavior is present, (3) justify "
    "the decision grounded in the located utterances. Quote cited "
    "utterances verbatim; never invent or paraphrase quotes."
)

REPROMPT_MARK = "Evidence check failed"


@dataclass(frozen=True)
class EvalParams:
    token_budget: int = 24_000
    repair_retries: int = 2
    reprompt_on_flag: bool = True
    concurrency: int = 4
    prompt_version: str = "v1"


@dataclass(frozen=True)
class EvalTask:
    session_id: str
    indicator: Indicator
    transcript: Transcript
    prompt_version: str = "v1"

    def __post_init__(self):
        if not self.indicator.language_accessible:
            raise InvariantViolation(
                f"indicator {self.indicator.id!r} is not language-accessible")


def _indicator_block(ind: Indicator) -> str:
    lines = [f"Indicator {ind.id} (level {ind.level}): {ind.description}", ""]
    lines.append("Positive examples (behavior present):")
    if ind.positive_examples:
        lines += [f"+ {ex}" for ex in ind.positive_examples]
    else:
        lines.append("+ (none provided)")
    lines.append("Negative examples (behavior absent):")
    if ind.negative_examples:
        lines += [f"- {ex}" for ex in ind.negative_examples]
    else:
        lines.append("- (none provided)")
    return "\n".join(lines)


_INSTRUCTIONS = (
    "Steps: first locate the relevant utterances, then decide whether the "
    "indicator is present, then justify with the located evidence.\n"
    "Return JSON only: "
    '{"located_utterances": [{"segment_id": "...", "quote": "..."}], '
    '"observed": true|false, "rationale": "...", "suggestion": "..."}\n'
    "The quote must be copied verbatim from the cited segment. When the "
    "indicator is absent, set observed to false and offer a short "
    "pedagogical suggestion."
)


def build_eval_prompt(task: EvalTask,
                      token_budget: int = EvalParams.token_budget) -> list[LlmRequest]:
    """Assemble the request(s) for one indicator.

    An over-budget transcript is split into consecutive chunks, each
    carrying the identical indicator section; the caller ORs chunk
    verdicts and concatenates evidence.
    """
    header = _indicator_block(task.indicator)
    lines = [render_segment_line(s) for s in task.transcript.segments]
    fixed_cost = (estimate_tokens(SYSTEM_PROMPT) + estimate_tokens(header)
                  + estimate_tokens(_INSTRUCTIONS) + 16)

    chunks: list[list[str]] = []
    current: list[str] = []
    current_cost = 0
    for line in lines:
        line_cost = estimate_tokens(line)
        if current and fixed_cost + current_cost + line_cost > token_budget:
            chunks.append(current)
            current, current_cost = [], 0
        current.append(line)
        current_cost += line_cost
    if current:
        chunks.append(current)

    requests = []
    for i, chunk in enumerate(chunks):
        part = (f" (transcript part {i + 1} of {len(chunks)})"
                if len(chunks) > 1 else "")
        user_prompt = (
            f"{header}\n\nTranscript{part}:\n" + "\n".join(chunk)
            + "\n\n" + _INSTRUCTIONS
        )
        requests.append(LlmRequest(
            system_prompt=SYSTEM_PROMPT,
            user_prompt=user_prompt,
            response_schema_id="eval-output",
            schema_args={"indicator_id": task.indicator.id},
            temperature=0.0,
        ))
    return requests


def validate_evidence(observed: bool, evidence: tuple[Evidence, ...],
                      transcript: Transcript) -> ValidationStatus:
    """Valid iff absence, or presence backed by verbatim quotes.

    Quotes compare as NFC substrings of the cited segment's text; fuzzy
    matching is deliberately absent.
    """
    if not observed:
        return ValidationStatus.VALID
    if not evidence:
        return ValidationStatus.FLAGGED_NO_EVIDENCE
    for ev in evidence:
        segment = transcript.segment_by_id(ev.segment_id)
        if segment is None or ev.quote not in segment.text:
            return ValidationStatus.FLAGGED_QUOTE_MISMATCH
    return ValidationStatus.VALID


def _parse_reply(parsed: dict) -> tuple[bool, tuple[Evidence, ...], str, str | None]:
    evidence = tuple(Evidence(segment_id=e["segment_id"], quote=e["quote"])
                     for e in parsed.get("located_utterances", []))
    suggestion = parsed.get("suggestion")
    return (bool(parsed["observed"]), evidence,
            str(parsed.get("rationale", "")), suggestion)


def evaluate_indicator(task: EvalTask, backend: LlmBackend,
                       params: EvalParams = EvalParams()) -> IndicatorJudgment:
    """Judge one indicator; flagged statuses surface instead of failing."""
    requests = build_eval_prompt(task, params.token_budget)
    chunk_observed: list[bool] = []
    evidence_all: list[Evidence] = []
    rationales: list[str] = []
    suggestion: str | None = None
    status = ValidationStatus.VALID
    model_id = ""
    flag_retries = 0
    repair_retries = 0

    for req in requests:
        resp = complete(req, backend, repair_retries=params.repair_retries)
        model_id = resp.model_id or model_id
        repair_retries += resp.repair_retries
        if not resp.ok:
            chunk_observed.append(False)
            rationales.append(f"unparseable model reply: {resp.parse_failure}")
            status = ValidationStatus.FLAGGED_NO_EVIDENCE
            continue
        observed, evidence, rationale, sugg = _parse_reply(resp.parsed)
        verdict = validate_evidence(observed, evidence, task.transcript)
        if verdict.is_flagged and params.reprompt_on_flag:
            flag_retries += 1
            retry_req = LlmRequest(
                system_prompt=req.system_prompt,
                user_prompt=(req.user_prompt
                             + f"\n\n{REPROMPT_MARK}: {verdict.value}. "
                             "Cite only utterances from the transcript above, "
                             "quoting them verbatim."),
                response_schema_id=req.response_schema_id,
                schema_args=req.schema_args,
                temperature=req.temperature,
            )
            retry_resp = complete(retry_req, backend,
                                  repair_retries=params.repair_retries)
            repair_retries += retry_resp.repair_retries
            if retry_resp.ok:
                observed, evidence, rationale, sugg = _parse_reply(retry_resp.parsed)
                verdict = validate_evidence(observed, evidence, task.transcript)
                model_id = retry_resp.model_id or model_id
        chunk_observed.append(observed)
        if observed:
            evidence_all.extend(evidence)
        if rationale:
            rationales.append(rationale)
        if sugg and suggestion is None:
            suggestion = sugg
        if verdict.is_flagged:
            status = verdict

    meta = {
        "model_id": model_id,
        "prompt_version": task.prompt_version,
        "chunks": str(len(requests)),
        "flag_retries": str(flag_retries),
        "repair_retries": str(repair_retries),
    }
    return IndicatorJudgment(
        indicator_id=task.indicator.id,
        observed=any(chunk_observed),
        evidence=tuple(evidence_all),
        rationale=" | ".join(rationales),
        suggestion=suggestion,
        validation=status,
        model_meta=meta,
    )


def evaluate_session(rubric: Rubric, transcript: Transcript,
                     backend: LlmBackend,
                     params: EvalParams = EvalParams(),
                     on_result=None) -> list[IndicatorJudgment]:
    """One judgment per language-accessible indicator, in rubric order.

    A hard backend failure on one indicator becomes a flagged judgment
    and never aborts the batch; only a session where every call
    hard-failed raises. ``on_result`` (if given) observes each judgment
    as it completes, for progress reporting.
    """
    if transcript.provenance != Provenance.REFINED:
        raise InvariantViolation("evaluation expects a refined transcript")
    indicators = [ind for item in rubric.items
                  for ind in item.indicators if ind.language_accessible]
    if not indicators:
        logger.warning("rubric %s has no language-accessible indicators",
                       rubric.scale.value)
        return []

    def run(ind: Indicator) -> tuple[IndicatorJudgment, bool]:
        task = EvalTask(session_id=transcript.session_id, indicator=ind,
                        transcript=transcript,
                        prompt_version=params.prompt_version)
        try:
            judgment, failed = evaluate_indicator(task, backend, params), False
        except (BackendUnavailable, AuthFailure) as exc:
            judgment = IndicatorJudgment(
                indicator_id=ind.id,
                observed=False,
                evidence=(),
                rationale=f"evaluation backend failed: {exc}",
                validation=ValidationStatus.FLAGGED_NO_EVIDENCE,
                model_meta={"hard_failure": type(exc).__name__,
                            "prompt_version": params.prompt_version},
            )
            failed = True
        if on_result is not None:
            on_result(judgment)
        return judgment, failed

    max_workers = max(1, min(params.concurrency, len(indicators)))
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        outcomes = list(pool.map(run, indicators))

    judgments = [j for j, _ in outcomes]
    if outcomes and all(failed for _, failed in outcomes):
        raise SessionEvalFailed(
            f"all {len(outcomes)} indicator evaluations hard-failed")
    return judgments
