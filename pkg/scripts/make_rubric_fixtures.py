#!/usr/bin/env python3
"""Regenerate the synthetic standard-profile rubric fixtures.

The real assessment scales are copyrighted, so the repository ships
structurally conforming synthetic rubrics instead: correct item and
indicator counts per scale, plausible dimensions, generated indicator
text. Deterministic output — rerunning never changes the files.
"""

from __future__ import annotations

import json
from pathlib import Path

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures" / "rubrics"

# (scale, item count, indicator count, dimensions with item allocation)
CONFIGS = [
    ("ecqrs_ec", 17, 112, [
        ("Literacy", 5), ("Mathematics", 4),
        ("Science & Environment", 4), ("Diversity", 4)]),
    ("sstew", 14, 94, [
        ("Trust & Self-regulation", 4), ("Language & Communication", 4),
        ("Learning & Critical Thinking", 3), ("Planning & Assessment", 3)]),
]

LEVELS = (1, 3, 5, 7)

DESCRIPTION_STEMS = [
    "Teacher models the target behavior during group time",
    "Children respond verbally and the teacher extends their answer",
    "Teacher links the activity to children's prior experience",
    "Teacher invites predictions before demonstrating",
    "Children take turns leading part of the exchange",
    "Teacher rephrases a child's idea using richer vocabulary",
    "Teacher checks understanding with an open question",
    "Children compare observations with each other",
]


def build_rubric(scale: str, n_items: int, n_indicators: int,
                 dimensions: list[tuple[str, int]]) -> dict:
    assert sum(count for _, count in dimensions) == n_items
    slots = n_items * len(LEVELS)
    extra = n_indicators - slots
    assert 0 <= extra <= slots, "per-level counts must stay in 1..2"

    prefix = "EC" if scale == "ecqrs_ec" else "SW"
    items = []
    indicator_serial = 0
    slot_serial = 0
    item_index = 0
    for dimension, count in dimensions:
        for _ in range(count):
            item_index += 1
            item_id = f"{scale.upper().replace('_', '')}.{prefix}{item_index}"
            indicators = []
            for level in LEVELS:
                per_level = 2 if slot_serial < extra else 1
                slot_serial += 1
                for ordinal in range(1, per_level + 1):
                    indicator_serial += 1
                    stem = DESCRIPTION_STEMS[indicator_serial % len(DESCRIPTION_STEMS)]
                    indicators.append({
                        "id": f"{item_id}.L{level}.{ordinal}",
                        "scale": scale,
                        "item_id": item_id,
                        "level": level,
                        "description": f"{stem} (synthetic indicator "
                                       f"{indicator_serial}, level {level}).",
                        "positive_examples": [
                            f"synthetic positive example {indicator_serial}a",
                            f"synthetic positive example {indicator_serial}b",
                        ],
                        "negative_examples": [
                            f"synthetic negative example {indicator_serial}",
                        ],
                        "language_accessible": indicator_serial % 23 != 0,
                    })
            items.append({
                "id": item_id,
                "scale": scale,
                "dimension": dimension,
                "title": f"Synthetic item {item_index} ({dimension})",
                "indicators": indicators,
            })
    total = sum(len(item["indicators"]) for item in items)
    assert total == n_indicators, (scale, total)
    return {
        "scale": scale,
        "version": f"{scale}-standard-synthetic-1.0",
        "profile": "standard",
        "items": items,
    }


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    for scale, n_items, n_indicators, dimensions in CONFIGS:
        rubric = build_rubric(scale, n_items, n_indicators, dimensions)
        path = FIXTURES / f"{scale}_standard.json"
        path.write_text(json.dumps(rubric, ensure_ascii=False, indent=2) + "\n",
                        encoding="utf-8")
        print(f"wrote {path} ({n_items} items / {n_indicators} indicators)")


if __name__ == "__main__":
    main()
