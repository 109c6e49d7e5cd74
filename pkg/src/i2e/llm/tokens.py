"""Backend-independent token estimation for window sizing.

Counts 1 token per CJK-class character and 1 per 4 other characters
(rounded up). Deliberately conservative; used only to size prompt
windows, never for billing.
"""

from __future__ import annotations

import math

from ..textnorm import is_cjk


def estimate_tokens(text: str) -> int:
    if not text:
        return 0
    cjk = sum(1 for ch in text if is_cjk(ch))
    other = len(text) - cjk
    return cjk + math.ceil(other / 4)
