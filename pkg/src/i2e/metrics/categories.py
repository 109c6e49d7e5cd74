"""Alignment-based categorization of recognition errors.

Matched gold/hypothesis segment pairs are compared in two layers: a
punctuation-insensitive layer for real content damage (substitution
runs become homophone or other-substitution events, insertion runs
extra words, deletion runs omissions), and the raw layer on top so
differences that vanish under punctuation stripping count as
punctuation/segmentation damage. Each contiguous run is one event, so
counts line up with injected-error manifests.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..model import Transcript
from ..refine.lexicon import HomophoneLexicon
from ..textnorm import nfc, strip_punctuation, strip_whitespace
from .alignment import OP_DELETE, OP_INSERT, OP_SUBSTITUTE, align
from .cer import pair_segments

HOMOPHONE = "homophone"
EXTRA_WORDS = "extra_words"
SPEAKER_IDENTIFICATION = "speaker_identification"
PUNCTUATION_SEGMENTATION = "punctuation_segmentation"
OMISSION = "omission"
OTHER_SUBSTITUTION = "other_substitution"

CATEGORY_ORDER = (HOMOPHONE, EXTRA_WORDS, SPEAKER_IDENTIFICATION,
                  PUNCTUATION_SEGMENTATION, OMISSION, OTHER_SUBSTITUTION)


@dataclass
class ErrorCategoryReport:
    counts: dict[str, int]
    shares: dict[str, float]
    total: int

    def to_dict(self) -> dict:
        return {"counts": dict(self.counts), "shares": dict(self.shares),
                "total": self.total}


def _strip(text: str) -> str:
    return strip_punctuation(strip_whitespace(nfc(text)))


def categorize_errors(gold: Transcript, hyp: Transcript,
                      lexicon: HomophoneLexicon) -> ErrorCategoryReport:
    counts = {cat: 0 for cat in CATEGORY_ORDER}

    # Group hypothesis segments under the gold segment they overlap most,
    # so a split utterance is judged against its whole gold text.
    groups: dict[str, list] = {}
    dropped_gold = []
    orphan_hyps = []
    for g, h in pair_segments(gold, hyp):
        if g is None:
            orphan_hyps.append(h)
        elif h is None:
            dropped_gold.append(g)
        else:
            groups.setdefault(g.id, []).append(h)

    for h in orphan_hyps:
        owner = _best_overlap_owner(h, gold)
        if owner is not None and owner.id in groups:
            groups[owner.id].append(h)
        else:
            counts[EXTRA_WORDS] += 1

    for g in dropped_gold:
        counts[OMISSION] += 1

    for g in gold.segments:
        hyps = groups.get(g.id)
        if not hyps:
            continue
        hyps.sort(key=lambda s: (s.start_ms, s.id))
        if len(hyps) > 1:
            counts[PUNCTUATION_SEGMENTATION] += len(hyps) - 1
        joined = "".join(h.text for h in hyps)
        g_strip, h_strip = _strip(g.text), _strip(joined)
        flips = sum(1 for h in hyps if h.speaker != g.speaker)

        if g_strip == h_strip:
            if flips:
                counts[SPEAKER_IDENTIFICATION] += flips
            elif nfc(g.text) != nfc(joined):
                counts[PUNCTUATION_SEGMENTATION] += 1
            continue

        for run_op, g_span, h_span in _runs(g_strip, h_strip):
            if run_op == OP_SUBSTITUTE:
                if _is_homophone(g_strip, h_strip, g_span, h_span, lexicon):
                    counts[HOMOPHONE] += 1
                else:
                    counts[OTHER_SUBSTITUTION] += 1
            elif run_op == OP_INSERT:
                counts[EXTRA_WORDS] += 1
            elif run_op == OP_DELETE:
                counts[OMISSION] += 1

    total = sum(counts.values())
    shares = {cat: (counts[cat] / total if total else 0.0)
              for cat in CATEGORY_ORDER}
    return ErrorCategoryReport(counts=counts, shares=shares, total=total)


def misrecognized_terms(gold: Transcript, hyp: Transcript) -> list[dict]:
    """Frequency table of misrecognized terms across a session.

    Each substitution run of the per-segment alignments contributes one
    (gold term, hypothesis term) occurrence; rows come back sorted by
    count, then gold term. Feeds term-frequency exports (JSON/CSV); the
    rendering of anything prettier is out of scope.
    """
    counts: dict[tuple[str, str], int] = {}
    for g, h in pair_segments(gold, hyp):
        if g is None or h is None:
            continue
        g_strip, h_strip = _strip(g.text), _strip(h.text)
        if not g_strip or g_strip == h_strip:
            continue
        for run_op, g_span, h_span in _runs(g_strip, h_strip):
            if run_op != OP_SUBSTITUTE:
                continue
            pair = (g_strip[g_span[0]:g_span[1]], h_strip[h_span[0]:h_span[1]])
            counts[pair] = counts.get(pair, 0) + 1
    rows = [{"gold": gold_term, "hyp": hyp_term, "count": count}
            for (gold_term, hyp_term), count in counts.items()]
    rows.sort(key=lambda r: (-r["count"], r["gold"], r["hyp"]))
    return rows


def _best_overlap_owner(h, gold: Transcript):
    best, best_overlap = None, 0
    for g in gold.segments:
        overlap = min(g.end_ms, h.end_ms) - max(g.start_ms, h.start_ms)
        if overlap > best_overlap:
            best, best_overlap = g, overlap
    return best


def _runs(g_text: str, h_text: str):
    """Contiguous same-op runs of the minimal alignment.

    Yields (op, (g_start, g_end), (h_start, h_end)) with end-exclusive
    spans into the stripped texts.
    """
    _, _, _, ops = align(g_text, h_text)
    run_op = None
    g_lo = g_hi = h_lo = h_hi = 0
    for op, ref_pos, hyp_pos in ops:
        if op not in (OP_SUBSTITUTE, OP_INSERT, OP_DELETE):
            if run_op is not None:
                yield run_op, (g_lo, g_hi), (h_lo, h_hi)
                run_op = None
            continue
        if op != run_op:
            if run_op is not None:
                yield run_op, (g_lo, g_hi), (h_lo, h_hi)
            run_op = op
            g_lo, h_lo = ref_pos, hyp_pos
            if op == OP_INSERT:
                g_lo = ref_pos
                g_hi = ref_pos
                h_hi = hyp_pos + 1
                continue
            if op == OP_DELETE:
                h_lo = hyp_pos
                h_hi = hyp_pos
                g_hi = ref_pos + 1
                continue
            g_hi, h_hi = ref_pos + 1, hyp_pos + 1
            continue
        if op == OP_SUBSTITUTE:
            g_hi, h_hi = ref_pos + 1, hyp_pos + 1
        elif op == OP_DELETE:
            g_hi = ref_pos + 1
        else:
            h_hi = hyp_pos + 1
    if run_op is not None:
        yield run_op, (g_lo, g_hi), (h_lo, h_hi)


def _is_homophone(g_text: str, h_text: str, g_span: tuple[int, int],
                  h_span: tuple[int, int], lexicon: HomophoneLexicon) -> bool:
    """A substitution run is a homophone when a lexicon pair covers it.

    Minimal alignments shrink a word swap to its differing characters,
    so the check looks for a (right, wrong) occurrence pair whose spans
    contain the run — or any two entries with equal pinyin doing so.
    """
    gold_entries = _covering_entries(g_text, g_span, lexicon)
    hyp_entries = _covering_entries(h_text, h_span, lexicon)
    for g_entry, g_field in gold_entries:
        for h_entry, h_field in hyp_entries:
            if g_entry is h_entry and g_field != h_field:
                return True
            if g_entry.pinyin == h_entry.pinyin and g_field != h_field:
                return True
    return False


def _covering_entries(text: str, span: tuple[int, int], lexicon: HomophoneLexicon):
    """(entry, field) pairs whose wrong/right string occurs in ``text``
    covering ``span``."""
    lo, hi = span
    found = []
    for entry in lexicon.entries:
        for field_name, needle in (("wrong", entry.wrong), ("right", entry.right)):
            start = text.find(needle)
            while start >= 0:
                if start <= lo and hi <= start + len(needle):
                    found.append((entry, field_name))
                    break
                start = text.find(needle, start + 1)
    return found
