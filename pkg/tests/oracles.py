"""Independent reference implementations used to cross-check the library.

Everything here is deliberately brute-force: memoized recursion for edit
distance, exhaustive pair counting for ROC-AUC, per-threshold recounting for
average precision, and grid scans for threshold selection. None of it shares
code with the production paths it checks.
"""

from __future__ import annotations

import math


def levenshtein_recursive(s: str, t: str) -> int:
    """Textbook recursive definition with memoization."""
    memo: dict[tuple[int, int], int] = {}

    def go(i: int, j: int) -> int:
        if i == 0:
            return j
        if j == 0:
            return i
        key = (i, j)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if s[i - 1] == t[j - 1]:
            sub = go(i - 1, j - 1)
        else:
            sub = go(i - 1, j - 1) + 1
        val = min(go(i - 1, j) + 1, go(i, j - 1) + 1, sub)
        memo[key] = val
        return val

    return go(len(s), len(t))


def roc_auc_pairwise(probs, labels) -> float | None:
    """Exhaustive (positive, negative) pair counting with 0.5 tie credit."""
    pos = [p for p, y in zip(probs, labels) if y == 1]
    neg = [p for p, y in zip(probs, labels) if y == 0]
    if not pos or not neg:
        return None
    score = 0.0
    for pp in pos:
        for pn in neg:
            if pp > pn:
                score += 1.0
            elif pp == pn:
                score += 0.5
    return score / (len(pos) * len(neg))


def average_precision_recount(probs, labels) -> float | None:
    """Step-wise AP where precision/recall are recounted from scratch at each
    distinct threshold instead of accumulated."""
    n_pos = sum(labels)
    if n_pos == 0:
        return None
    ap = 0.0
    prev_recall = 0.0
    for t in sorted(set(probs), reverse=True):
        predicted = [(p, y) for p, y in zip(probs, labels) if p >= t]
        tp = sum(y for _, y in predicted)
        precision = tp / len(predicted)
        recall = tp / n_pos
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


def mcc_from_counts(tp: int, tn: int, fp: int, fn: int) -> float:
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if denom == 0:
        return 0.0
    return (tp * tn - fp * fn) / math.sqrt(denom)


def mcc_grid_scan(probs, labels, grid_points: int = 10_000):
    """Best MCC over a uniform threshold grid on [0, 1]; returns
    (best_mcc, best_threshold) with the smallest optimal grid threshold."""
    import numpy as np

    p = np.asarray(probs, dtype=float)
    y = np.asarray(labels, dtype=int)
    ts = np.linspace(0.0, 1.0, grid_points)
    pred = p[None, :] >= ts[:, None]
    pos = y == 1
    tp = (pred & pos[None, :]).sum(axis=1)
    fp = (pred & ~pos[None, :]).sum(axis=1)
    fn = pos.sum() - tp
    tn = (~pos).sum() - fp
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    with np.errstate(invalid="ignore", divide="ignore"):
        m = np.where(denom > 0, (tp * tn - fp * fn) / np.sqrt(denom.astype(float)), 0.0)
    best = int(np.argmax(m))
    return float(m[best]), float(ts[best])
