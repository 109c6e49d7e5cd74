"""Independent reference implementations used only to check the real ones.

Each oracle deliberately takes a different computational route than the
code under test: shortest-path search instead of a DP matrix, the
closed-form 2x2 kappa identity instead of the p_o/p_e definition, and a
set-comprehension reading of the level-ascent scoring rule.
"""

from __future__ import annotations

from collections import deque


def bfs_edit_distance(a: str, b: str) -> int:
    """Minimal unit-cost edit distance via 0-1 BFS over the edit graph."""
    n, m = len(a), len(b)
    INF = float("inf")
    dist: dict[tuple[int, int], float] = {(0, 0): 0}
    dq: deque[tuple[int, int]] = deque([(0, 0)])
    settled: set[tuple[int, int]] = set()
    while dq:
        node = dq.popleft()
        if node in settled:
            continue
        settled.add(node)
        i, j = node
        d = dist[node]
        if i < n and j < m and a[i] == b[j]:
            nxt = (i + 1, j + 1)
            if d < dist.get(nxt, INF):
                dist[nxt] = d
                dq.appendleft(nxt)
        steps = []
        if i < n and j < m and a[i] != b[j]:
            steps.append((i + 1, j + 1))
        if i < n:
            steps.append((i + 1, j))
        if j < m:
            steps.append((i, j + 1))
        for nxt in steps:
            if d + 1 < dist.get(nxt, INF):
                dist[nxt] = d + 1
                dq.append(nxt)
    return int(dist[(n, m)])


def kappa_closed_form(a: int, b: int, c: int, d: int) -> float | None:
    """2x2 Cohen's kappa via the 2(ad - bc) identity."""
    denominator = (a + b) * (b + d) + (a + c) * (c + d)
    if denominator == 0:
        return None
    return 2.0 * (a * d - b * c) / denominator


def score_by_rule(ladder: list[tuple[int, list[bool]]]) -> tuple[int, float]:
    """(score, next_level_fraction) by the quoted scoring protocol.

    ``ladder`` is the ascending list of (level, indicator truths).
    Formulated over the set of qualifying prefixes rather than a
    sequential scan.
    """
    level_ok = [all(truths) for _, truths in ladder]

    def met_through(k: int) -> bool:
        return all(level_ok[:k + 1])

    qualifying = [k for k in range(len(ladder)) if met_through(k)]
    if not qualifying:
        return 1, 0.0
    k = max(qualifying)
    best_level = ladder[k][0]
    if k + 1 < len(ladder):
        next_level, next_truths = ladder[k + 1]
        fraction = sum(next_truths) / len(next_truths)
        if fraction > 0.5:
            return (best_level + next_level) // 2, fraction
        return best_level, fraction
    return best_level, 0.0
