from .agreement import AgreementReport, AgreementStats, agreement, kappa_from_labels
from .categories import ErrorCategoryReport, categorize_errors, misrecognized_terms
from .cer import (
    DEFAULT_POLICY,
    CerBreakdown,
    NormalizationPolicy,
    compute_cer,
    corpus_cer,
)
from .efficiency import (
    AutomatedTimings,
    EfficiencyReport,
    TraditionalTimings,
    WorkflowTimings,
    efficiency_gain,
)

__all__ = [
    "AgreementReport",
    "AgreementStats",
    "AutomatedTimings",
    "CerBreakdown",
    "DEFAULT_POLICY",
    "EfficiencyReport",
    "ErrorCategoryReport",
    "NormalizationPolicy",
    "TraditionalTimings",
    "WorkflowTimings",
    "agreement",
    "categorize_errors",
    "compute_cer",
    "corpus_cer",
    "efficiency_gain",
    "kappa_from_labels",
    "misrecognized_terms",
]
