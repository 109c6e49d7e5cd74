"""Macro (per-group) averaging used by both scoring and agreement reports.

One implementation on purpose: dimension means and overall means must be
computed identically wherever they appear.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence


def macro_mean(values: Iterable[float]) -> float:
    values = list(values)
    if not values:
        raise ValueError("macro_mean of no values")
    return sum(values) / len(values)


def group_means(pairs: Iterable[tuple[str, float]]) -> dict[str, float]:
    """Unweighted mean per group key, insertion-ordered by first appearance."""
    totals: dict[str, list[float]] = {}
    for key, value in pairs:
        totals.setdefault(key, []).append(value)
    return {key: macro_mean(vals) for key, vals in totals.items()}


def overall_from_groups(per_group: Mapping[str, float] | Sequence[float]) -> float:
    """Macro average across groups (each group weighs the same)."""
    if isinstance(per_group, Mapping):
        return macro_mean(per_group.values())
    return macro_mean(per_group)
