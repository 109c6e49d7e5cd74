"""Sliding-window planning for transcript correction.

Windows partition the transcript: every segment is correctable in
exactly one window, flanked by read-only context segments. A window
whose rendered content would blow the token budget is split until it
fits; a single over-budget segment still gets its own window.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import EmptyTranscript
from ..llm.tokens import estimate_tokens
from ..model import Segment, Transcript


@dataclass(frozen=True)
class Window:
    index: int
    correctable_ids: tuple[str, ...]
    context_before_ids: tuple[str, ...] = ()
    context_after_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class WindowPlan:
    windows: tuple[Window, ...]

    def all_correctable_ids(self) -> list[str]:
        return [sid for w in self.windows for sid in w.correctable_ids]


def render_segment_line(seg: Segment, read_only: bool = False) -> str:
    # Rendered prompts are line-oriented; any newline inside an
    # utterance would corrupt the frame, so flatten it.
    text = seg.text.replace("\n", " ")
    suffix = " [read-only]" if read_only else ""
    return f"[{seg.id}|{seg.speaker.value}] {text}{suffix}"


def _window_cost(segments: list[Segment], before: list[Segment],
                 after: list[Segment]) -> int:
    lines = [render_segment_line(s, read_only=True) for s in before]
    lines += [render_segment_line(s) for s in segments]
    lines += [render_segment_line(s, read_only=True) for s in after]
    return sum(estimate_tokens(line) for line in lines)


def plan_windows(t: Transcript, window_size: int = 30, context_size: int = 5,
                 token_budget: int = 6000) -> WindowPlan:
    if not t.segments:
        raise EmptyTranscript(f"session {t.session_id!r} has no segments")
    if window_size < 1 or context_size < 0 or token_budget < 1:
        raise ValueError("window_size >= 1, context_size >= 0, token_budget >= 1")

    segments = list(t.segments)
    windows: list[Window] = []
    start = 0
    while start < len(segments):
        end = start  # exclusive end of the window being grown
        while end < len(segments) and end - start < window_size:
            candidate = segments[start:end + 1]
            before = segments[max(0, start - context_size):start]
            after = segments[end + 1:end + 1 + context_size]
            if (_window_cost(candidate, before, after) > token_budget
                    and end > start):
                break
            end += 1
        if end == start:
            # single segment over budget: its own window regardless
            end = start + 1
        before = segments[max(0, start - context_size):start]
        after = segments[end:end + context_size]
        windows.append(Window(
            index=len(windows),
            correctable_ids=tuple(s.id for s in segments[start:end]),
            context_before_ids=tuple(s.id for s in before),
            context_after_ids=tuple(s.id for s in after),
        ))
        start = end
    return WindowPlan(windows=tuple(windows))
