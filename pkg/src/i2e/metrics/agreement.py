"""Percentage agreement and Cohen's kappa over binary indicator labels.

Kappa corrects observed agreement for chance: k = (p_o - p_e) / (1 - p_e)
with p_e from the marginal label rates of both raters. Dimension-level
stats aggregate to an overall mean with the same macro averaging the
scoring engine uses.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from ..aggregate import overall_from_groups
from ..errors import EmptyInput, KeyMismatch, LengthMismatch
from ..model import ExpertAnnotation, Rubric


@dataclass
class AgreementStats:
    both_true: int       # a
    only_model: int      # b
    only_human: int      # c
    both_false: int      # d
    p_o: float
    p_e: float
    kappa: float | None  # None when p_e == 1 (both raters constant and equal)
    pct_agreement: float

    @classmethod
    def from_confusion(cls, a: int, b: int, c: int, d: int) -> "AgreementStats":
        n = a + b + c + d
        if n == 0:
            raise EmptyInput("confusion matrix is empty")
        p_o = (a + d) / n
        p_e = ((a + b) * (a + c) + (c + d) * (b + d)) / (n * n)
        kappa = None if p_e == 1.0 else (p_o - p_e) / (1.0 - p_e)
        return cls(a, b, c, d, p_o=p_o, p_e=p_e, kappa=kappa, pct_agreement=p_o)

    def to_dict(self) -> dict:
        return {
            "both_true": self.both_true,
            "only_model": self.only_model,
            "only_human": self.only_human,
            "both_false": self.both_false,
            "p_o": self.p_o,
            "p_e": self.p_e,
            "kappa": self.kappa,
            "pct_agreement": self.pct_agreement,
        }


def kappa_from_labels(x: Sequence[bool], y: Sequence[bool]) -> AgreementStats:
    """Stats for two parallel binary label vectors (model first)."""
    if len(x) != len(y):
        raise LengthMismatch(f"{len(x)} vs {len(y)} labels")
    if not x:
        raise EmptyInput("no labels")
    a = b = c = d = 0
    for xi, yi in zip(x, y):
        if xi and yi:
            a += 1
        elif xi:
            b += 1
        elif yi:
            c += 1
        else:
            d += 1
    return AgreementStats.from_confusion(a, b, c, d)


@dataclass
class AgreementReport:
    per_dimension: dict[str, AgreementStats]
    overall_kappa: float | None
    overall_pct: float

    def to_dict(self) -> dict:
        return {
            "per_dimension": {k: v.to_dict()
                              for k, v in sorted(self.per_dimension.items())},
            "overall_kappa": self.overall_kappa,
            "overall_pct": self.overall_pct,
        }


def agreement(model: Mapping[str, bool], human: ExpertAnnotation,
              rubric: Rubric) -> AgreementReport:
    """Per-dimension agreement between model judgments and an expert
    annotation, plus macro-averaged overall means.

    Key sets must match exactly; a mismatch raises KeyMismatch listing
    the symmetric difference.
    """
    model_keys = set(model)
    human_keys = set(human.judgments)
    if model_keys != human_keys:
        raise KeyMismatch(sorted(model_keys - human_keys),
                          sorted(human_keys - model_keys))
    human.check_against(rubric)

    by_dimension: dict[str, tuple[list[bool], list[bool]]] = {}
    for item in rubric.items:
        for ind in item.indicators:
            if ind.id in model_keys:
                xs, ys = by_dimension.setdefault(item.dimension, ([], []))
                xs.append(model[ind.id])
                ys.append(human.judgments[ind.id])

    per_dimension = {dim: kappa_from_labels(xs, ys)
                     for dim, (xs, ys) in by_dimension.items()}
    kappas = {dim: stats.kappa for dim, stats in per_dimension.items()
              if stats.kappa is not None}
    overall_kappa = overall_from_groups(kappas) if kappas else None
    overall_pct = overall_from_groups(
        {dim: stats.pct_agreement for dim, stats in per_dimension.items()})
    return AgreementReport(per_dimension=per_dimension,
                           overall_kappa=overall_kappa,
                           overall_pct=overall_pct)
