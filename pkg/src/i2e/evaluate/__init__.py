from .agent import (
    EvalParams,
    EvalTask,
    build_eval_prompt,
    evaluate_indicator,
    evaluate_session,
    validate_evidence,
)

__all__ = [
    "EvalParams",
    "EvalTask",
    "build_eval_prompt",
    "evaluate_indicator",
    "evaluate_session",
    "validate_evidence",
]
