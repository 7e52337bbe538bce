"""String-level and code-aware similarity measures."""

from cojudge.similarity.edit_distance import consecutive_churn, levenshtein, ned

__all__ = ["levenshtein", "ned", "consecutive_churn"]
