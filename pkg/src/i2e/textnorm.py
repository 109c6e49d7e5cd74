"""Unicode text handling shared by metrics, evidence checks, and prompts.

All text entering the system is NFC-normalized so that character error
rates and verbatim-substring evidence checks never depend on the encoding
form a backend happened to emit.
"""

from __future__ import annotations

import unicodedata

# Code points from the CJK radicals block upward (incl. kana, hangul,
# fullwidth forms) count as one token each in estimates and are treated
# as "CJK-class" for tokenizer-free budgeting.
_CJK_FLOOR = 0x2E80


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def is_cjk(ch: str) -> bool:
    return ord(ch) >= _CJK_FLOOR


def strip_punctuation(text: str) -> str:
    """Remove Unicode punctuation (category P*) and symbols used as
    sentence marks in CJK text."""
    return "".join(
        ch for ch in text if not unicodedata.category(ch).startswith("P")
    )


def strip_whitespace(text: str) -> str:
    return "".join(ch for ch in text if not ch.isspace())
