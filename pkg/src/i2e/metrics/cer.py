"""Character error rate over a minimal edit alignment.

Default normalization follows common Mandarin CER practice: NFC, then
whitespace and Unicode punctuation removed, full character sequence
compared (CJK and Latin alike). The policy is configurable and recorded
in the result so numbers are never ambiguous about what they scored.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import EmptyReference, SessionMismatch
from ..model import Transcript
from ..textnorm import nfc, strip_punctuation, strip_whitespace
from .alignment import OP_DELETE, OP_INSERT, OP_NAMES, OP_SUBSTITUTE, align


@dataclass(frozen=True)
class NormalizationPolicy:
    nfc: bool = True
    strip_whitespace: bool = True
    strip_punctuation: bool = True

    def apply(self, text: str) -> str:
        if self.nfc:
            text = nfc(text)
        if self.strip_whitespace:
            text = strip_whitespace(text)
        if self.strip_punctuation:
            text = strip_punctuation(text)
        return text

    def describe(self) -> str:
        parts = [name for name, on in (
            ("nfc", self.nfc),
            ("strip_whitespace", self.strip_whitespace),
            ("strip_punctuation", self.strip_punctuation),
        ) if on]
        return "+".join(parts) if parts else "none"


DEFAULT_POLICY = NormalizationPolicy()


@dataclass
class EditOp:
    op: str
    ref_pos: int
    hyp_pos: int
    ref_char: str | None
    hyp_char: str | None

    def to_dict(self) -> dict:
        return {"op": self.op, "ref_pos": self.ref_pos, "hyp_pos": self.hyp_pos,
                "ref_char": self.ref_char, "hyp_char": self.hyp_char}


@dataclass
class CerBreakdown:
    substitutions: int
    deletions: int
    insertions: int
    ref_chars: int
    cer: float
    alignment: list[EditOp] = field(default_factory=list)
    policy: str = DEFAULT_POLICY.describe()

    @property
    def total_errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    def to_dict(self) -> dict:
        return {
            "substitutions": self.substitutions,
            "deletions": self.deletions,
            "insertions": self.insertions,
            "ref_chars": self.ref_chars,
            "cer": self.cer,
            "policy": self.policy,
            "alignment": [op.to_dict() for op in self.alignment],
        }


def compute_cer(ref: str, hyp: str,
                policy: NormalizationPolicy = DEFAULT_POLICY,
                keep_alignment: bool = True) -> CerBreakdown:
    """CER = (S + D + I) / N over the minimal-cost character alignment."""
    ref_n = policy.apply(ref)
    hyp_n = policy.apply(hyp)
    if not ref_n:
        raise EmptyReference("reference empty after normalization")
    subs, dels, ins, ops = align(ref_n, hyp_n)
    alignment = []
    if keep_alignment:
        for op, ref_pos, hyp_pos in ops:
            alignment.append(EditOp(
                op=OP_NAMES[op],
                ref_pos=ref_pos,
                hyp_pos=hyp_pos,
                ref_char=ref_n[ref_pos] if op != OP_INSERT else None,
                hyp_char=hyp_n[hyp_pos] if op != OP_DELETE else None,
            ))
    n = len(ref_n)
    return CerBreakdown(
        substitutions=subs, deletions=dels, insertions=ins,
        ref_chars=n, cer=(subs + dels + ins) / n,
        alignment=alignment, policy=policy.describe())


def pair_segments(gold: Transcript, hyp: Transcript) -> list[tuple]:
    """Match segments across two transcripts of the same session.

    Same-id pairs win when both sides share ids; otherwise pairs form
    by maximal time overlap. Returns (gold_segment | None,
    hyp_segment | None) with unpaired segments on either side kept.
    """
    if gold.session_id != hyp.session_id:
        raise SessionMismatch(
            f"{gold.session_id!r} vs {hyp.session_id!r}")
    gold_ids = {s.id for s in gold.segments}
    hyp_ids = {s.id for s in hyp.segments}
    if gold_ids == hyp_ids:
        by_id = {s.id: s for s in hyp.segments}
        return [(g, by_id[g.id]) for g in gold.segments]

    pairs: list[tuple] = []
    used: set[int] = set()
    for g in gold.segments:
        best_idx, best_overlap = -1, 0
        for idx, h in enumerate(hyp.segments):
            if idx in used:
                continue
            overlap = min(g.end_ms, h.end_ms) - max(g.start_ms, h.start_ms)
            if overlap > best_overlap:
                best_idx, best_overlap = idx, overlap
        if best_idx >= 0:
            used.add(best_idx)
            pairs.append((g, hyp.segments[best_idx]))
        else:
            pairs.append((g, None))
    for idx, h in enumerate(hyp.segments):
        if idx not in used:
            pairs.append((None, h))
    return pairs


def corpus_cer(gold: Transcript, hyp: Transcript,
               policy: NormalizationPolicy = DEFAULT_POLICY) -> CerBreakdown:
    """Aggregate CER across paired segments.

    Per-segment alignment keeps matrices small on 3-hour sessions;
    counts sum, N is the total normalized reference length.
    """
    subs = dels = ins = n = 0
    for g, h in pair_segments(gold, hyp):
        g_text = policy.apply(g.text) if g else ""
        h_text = policy.apply(h.text) if h else ""
        if g is None:
            ins += len(h_text)
            continue
        n += len(g_text)
        if not g_text:
            ins += len(h_text)
            continue
        s, d, i, _ = align(g_text, h_text)
        subs, dels, ins = subs + s, dels + d, ins + i
    if n == 0:
        raise EmptyReference("gold transcript empty after normalization")
    return CerBreakdown(
        substitutions=subs, deletions=dels, insertions=ins,
        ref_chars=n, cer=(subs + dels + ins) / n,
        alignment=[], policy=policy.describe())
