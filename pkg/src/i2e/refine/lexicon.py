"""Homophone confusion lexicon, shipped as a data file.

Each entry pairs a frequent wrong recognition with the intended domain
term, both glossed, sharing one (toneless) pinyin reading. The lexicon
feeds correction prompts and the error categorizer; it is corpus
data, never hardcoded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..errors import InvariantViolation, ParseError
from ..textnorm import nfc


@dataclass(frozen=True)
class LexiconEntry:
    wrong: str
    right: str
    gloss_wrong: str
    gloss_right: str
    pinyin: str

    def __post_init__(self):
        object.__setattr__(self, "wrong", nfc(self.wrong))
        object.__setattr__(self, "right", nfc(self.right))
        if not self.wrong or not self.right or not self.pinyin:
            raise InvariantViolation("lexicon entry fields must be non-empty")
        if self.wrong == self.right:
            raise InvariantViolation(
                f"lexicon entry {self.wrong!r}: wrong and right are identical")


@dataclass(frozen=True)
class HomophoneLexicon:
    entries: tuple[LexiconEntry, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))

    @classmethod
    def from_json(cls, data: bytes | str) -> "HomophoneLexicon":
        try:
            doc = json.loads(data)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, offset=exc.pos)
        if isinstance(doc, dict):
            doc = doc.get("entries", [])
        if not isinstance(doc, list):
            raise ParseError("lexicon must be a JSON array of entries")
        entries = []
        for i, raw in enumerate(doc):
            try:
                entries.append(LexiconEntry(
                    wrong=raw["wrong"],
                    right=raw["right"],
                    gloss_wrong=raw.get("gloss_wrong", ""),
                    gloss_right=raw.get("gloss_right", ""),
                    pinyin=raw["pinyin"],
                ))
            except (KeyError, TypeError) as exc:
                raise ParseError(f"bad lexicon entry: {exc}", path=f"$[{i}]")
        return cls(tuple(entries))

    @classmethod
    def from_file(cls, path: str | Path) -> "HomophoneLexicon":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    def to_json(self) -> str:
        return json.dumps([
            {"wrong": e.wrong, "right": e.right, "gloss_wrong": e.gloss_wrong,
             "gloss_right": e.gloss_right, "pinyin": e.pinyin}
            for e in self.entries
        ], ensure_ascii=False, indent=2)
