from .agent import (
    RefineAudit,
    RefineParams,
    WindowCorrection,
    apply_corrections,
    build_refine_prompt,
    check_window_reply,
    refine,
)
from .lexicon import HomophoneLexicon, LexiconEntry
from .windows import Window, WindowPlan, plan_windows, render_segment_line

__all__ = [
    "HomophoneLexicon",
    "LexiconEntry",
    "RefineAudit",
    "RefineParams",
    "Window",
    "WindowCorrection",
    "WindowPlan",
    "apply_corrections",
    "build_refine_prompt",
    "check_window_reply",
    "plan_windows",
    "refine",
    "render_segment_line",
]
