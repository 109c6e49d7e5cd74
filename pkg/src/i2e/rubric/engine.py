"""Item scoring from binary indicator judgments.

An item scores at the highest level of its ladder for which that level
and every level below it have all indicators judged true (ascent stops
at the first level with any false indicator; nothing satisfied scores
1). If strictly more than half of the next level's indicators are also
true, the midpoint between the two levels is assigned.

Scoring sees only language-accessible indicators: inaccessible ones
cannot be judged from transcripts, so levels without any accessible
indicator drop out of an item's ladder and fully inaccessible items are
excluded from dimension means.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from ..aggregate import group_means, overall_from_groups
from ..errors import MissingJudgment
from ..model import ItemScore, Rubric, RubricItem, ScaleSummary
from ..model.serialize import parse_rubric


@dataclass(frozen=True)
class ScoringInput:
    rubric: Rubric
    judgments: Mapping[str, bool]

    def __post_init__(self):
        for item in self.rubric.items:
            for ind in item.accessible_indicators():
                if ind.id not in self.judgments:
                    raise MissingJudgment(ind.id)


def _accessible_ladder(item: RubricItem):
    """((level, indicator ids) pairs ascending, required id set),
    accessible indicators only.

    Items are immutable, so the derived ladder is memoized on the
    instance; scoring is called per pattern in exhaustive oracle sweeps.
    """
    cached = item.__dict__.get("_ladder")
    if cached is None:
        ladder: list[tuple[int, list[str]]] = []
        for ind in item.indicators:
            if not ind.language_accessible:
                continue
            if not ladder or ladder[-1][0] != ind.level:
                ladder.append((ind.level, []))
            ladder[-1][1].append(ind.id)
        cached = (tuple((level, tuple(ids)) for level, ids in ladder),
                  frozenset(ind_id for _, ids in ladder for ind_id in ids))
        object.__setattr__(item, "_ladder", cached)
    return cached


def derive_item_score(item: RubricItem, judgments: Mapping[str, bool]) -> ItemScore:
    ladder, required = _accessible_ladder(item)
    if not ladder:
        raise MissingJudgment(
            f"item {item.id!r} has no language-accessible indicators")

    if not required <= judgments.keys():
        raise MissingJudgment(sorted(required - judgments.keys())[0])

    satisfied: list[int] = []
    stop_index = 0
    for level, ids in ladder:
        if all(judgments[i] for i in ids):
            satisfied.append(level)
            stop_index += 1
        else:
            break

    if not satisfied:
        return ItemScore(item_id=item.id, score=1, satisfied_levels=(),
                         next_level_fraction=0.0)

    best = satisfied[-1]
    if stop_index < len(ladder):
        next_level, next_ids = ladder[stop_index]
        fraction = sum(1 for i in next_ids if judgments[i]) / len(next_ids)
        # midpoint only on strict majority of the next level
        score = (best + next_level) // 2 if fraction > 0.5 else best
        return ItemScore(item_id=item.id, score=score,
                         satisfied_levels=tuple(satisfied),
                         next_level_fraction=fraction)
    return ItemScore(item_id=item.id, score=best,
                     satisfied_levels=tuple(satisfied),
                     next_level_fraction=0.0)


def score_scale(scoring_input: ScoringInput) -> ScaleSummary:
    rubric = scoring_input.rubric
    in_scope = [item for item in rubric.items if item.accessible_indicators()]
    per_item = tuple(derive_item_score(item, scoring_input.judgments)
                     for item in in_scope)
    per_dimension = group_means(
        (item.dimension, float(score.score))
        for item, score in zip(in_scope, per_item))
    return ScaleSummary(
        scale=rubric.scale,
        per_item=per_item,
        per_dimension=per_dimension,
        overall_mean=overall_from_groups(per_dimension),
    )


def load_rubric(data: bytes | str) -> Rubric:
    """Parse and invariant-check a rubric file (see model.serialize)."""
    return parse_rubric(data)
