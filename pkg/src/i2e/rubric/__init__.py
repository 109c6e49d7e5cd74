from .engine import ScoringInput, derive_item_score, load_rubric, score_scale

__all__ = ["ScoringInput", "derive_item_score", "load_rubric", "score_scale"]
