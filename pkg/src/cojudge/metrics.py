"""Judge-quality metrics on probability/label sets.

Discrimination (ROC-AUC, average precision), probabilistic scoring (log loss,
Brier), calibration (ECE over equal-width bins), thresholded decision quality
(MCC with a validation-selected threshold applied unchanged to test), and
inter-rater agreement (Cohen's and Fleiss' kappa).

Conventions pinned here:
  * ROC-AUC is the Mann-Whitney probability; tied scores earn 0.5 credit.
  * Average precision is the step-wise (non-interpolated) sum over distinct
    descending score thresholds; tied scores form one threshold group.
  * Log loss clips probabilities to [1e-15, 1 - 1e-15].
  * MCC is 0 whenever a denominator factor is 0.
  * ECE bins are right-inclusive, ((b-1)/B, b/B], with p = 0 placed in bin 1.
  * Threshold candidates are {0.0} plus the distinct validation
    probabilities; ties in MCC resolve to the smallest threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

LOG_LOSS_EPS = 1e-15
DEFAULT_ECE_BINS = 15


class LengthMismatch(ValueError):
    """Rater label sequences differ in length."""


class IncompleteMatrix(ValueError):
    """Ratings matrix is ragged, empty, or has fewer than two raters."""


class MissingThreshold(KeyError):
    """A judge in the prediction table has no selected threshold."""


@dataclass(frozen=True)
class ScoredSet:
    """Paired predicted probabilities and binary ground-truth labels."""

    probs: tuple[float, ...]
    labels: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.probs) != len(self.labels):
            raise LengthMismatch(
                f"{len(self.probs)} probabilities vs {len(self.labels)} labels"
            )
        if not self.probs:
            raise ValueError("ScoredSet requires at least one pair")
        for p in self.probs:
            if not (0.0 <= p <= 1.0):
                raise ValueError(f"probability {p!r} outside [0, 1]")
        for y in self.labels:
            if y not in (0, 1):
                raise ValueError(f"label {y!r} not in {{0, 1}}")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, int]]) -> "ScoredSet":
        probs, labels = [], []
        for p, y in pairs:
            probs.append(float(p))
            labels.append(int(y))
        return cls(tuple(probs), tuple(labels))

    @property
    def n(self) -> int:
        return len(self.probs)


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class CalibrationBin:
    index: int
    count: int
    mean_confidence: float
    empirical_accuracy: float


@dataclass(frozen=True)
class ThresholdResult:
    threshold: float
    mcc_val: float
    mcc_test: float
    degenerate_val: bool = False


def roc_auc(s: ScoredSet) -> float | None:
    """Probability that a randomly chosen positive outscores a randomly
    chosen negative, with ties counted as 0.5.

    Computed from midranks (Mann-Whitney U), which is numerically identical
    to exhaustive pairwise counting. Returns None when only one class is
    present.
    """
    n_pos = sum(s.labels)
    n_neg = s.n - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    order = sorted(range(s.n), key=lambda i: s.probs[i])
    ranks = [0.0] * s.n
    i = 0
    while i < s.n:
        j = i
        while j + 1 < s.n and s.probs[order[j + 1]] == s.probs[order[i]]:
            j += 1
        midrank = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = midrank
        i = j + 1
    rank_sum_pos = math.fsum(r for r, y in zip(ranks, s.labels) if y == 1)
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def pr_auc(s: ScoredSet) -> float | None:
    """Average precision: sum of (recall step) x (precision) over distinct
    descending score thresholds. Returns None when no positive is present."""
    n_pos = sum(s.labels)
    if n_pos == 0:
        return None
    order = sorted(range(s.n), key=lambda i: -s.probs[i])
    ap = 0.0
    tp = 0
    seen = 0
    prev_recall = 0.0
    i = 0
    while i < s.n:
        j = i
        while j + 1 < s.n and s.probs[order[j + 1]] == s.probs[order[i]]:
            j += 1
        for k in range(i, j + 1):
            tp += s.labels[order[k]]
        seen = j + 1
        recall = tp / n_pos
        precision = tp / seen
        ap += (recall - prev_recall) * precision
        prev_recall = recall
        i = j + 1
    return ap


def log_loss(s: ScoredSet) -> float:
    total = math.fsum(
        -math.log(_clip(p)) if y == 1 else -math.log(_clip(1.0 - p))
        for p, y in zip(s.probs, s.labels)
    )
    return total / s.n


def _clip(p: float) -> float:
    return min(max(p, LOG_LOSS_EPS), 1.0 - LOG_LOSS_EPS)


def brier(s: ScoredSet) -> float:
    return math.fsum((p - y) ** 2 for p, y in zip(s.probs, s.labels)) / s.n


def calibration_bins(s: ScoredSet, bins: int = DEFAULT_ECE_BINS) -> list[CalibrationBin]:
    """Partition predictions into equal-width confidence bins over [0, 1].

    Bin b covers ((b-1)/B, b/B]; p = 0 is assigned to bin 1. Empty bins are
    omitted from the result.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    members: dict[int, list[int]] = {}
    for i, p in enumerate(s.probs):
        b = 1 if p == 0.0 else min(bins, max(1, math.ceil(p * bins)))
        members.setdefault(b, []).append(i)
    out = []
    for b in sorted(members):
        idx = members[b]
        conf = math.fsum(s.probs[i] for i in idx) / len(idx)
        acc = math.fsum(s.labels[i] for i in idx) / len(idx)
        out.append(CalibrationBin(index=b, count=len(idx), mean_confidence=conf, empirical_accuracy=acc))
    return out


def ece(s: ScoredSet, bins: int = DEFAULT_ECE_BINS) -> float:
    """Expected calibration error: bin-weighted mean absolute gap between
    mean confidence and empirical accuracy."""
    return math.fsum(
        (b.count / s.n) * abs(b.empirical_accuracy - b.mean_confidence)
        for b in calibration_bins(s, bins)
    )


def confusion_at(s: ScoredSet, t: float) -> ConfusionMatrix:
    """Confusion counts for the decision rule: predict positive iff p >= t."""
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"threshold {t!r} outside [0, 1]")
    tp = tn = fp = fn = 0
    for p, y in zip(s.probs, s.labels):
        if p >= t:
            if y == 1:
                tp += 1
            else:
                fp += 1
        else:
            if y == 1:
                fn += 1
            else:
                tn += 1
    return ConfusionMatrix(tp=tp, tn=tn, fp=fp, fn=fn)


def mcc(c: ConfusionMatrix) -> float:
    """Matthews correlation coefficient; 0 by convention when any
    denominator factor is 0."""
    denom = (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn)
    if denom == 0:
        return 0.0
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(denom)


def select_threshold(val: ScoredSet, test: ScoredSet) -> ThresholdResult:
    """Pick the decision threshold maximizing MCC on the validation set and
    apply it unchanged to the test set.

    Candidates are 0.0 plus every distinct validation probability; among
    equally good candidates the smallest wins. A single-class validation set
    cannot rank thresholds, so it falls back to 0.5 and is flagged.
    """
    if len(set(val.labels)) < 2:
        t_star = 0.5
        return ThresholdResult(
            threshold=t_star,
            mcc_val=mcc(confusion_at(val, t_star)),
            mcc_test=mcc(confusion_at(test, t_star)),
            degenerate_val=True,
        )
    candidates = sorted({0.0} | set(val.probs))
    best_t = candidates[0]
    best_mcc = mcc(confusion_at(val, best_t))
    for t in candidates[1:]:
        m = mcc(confusion_at(val, t))
        if m > best_mcc:
            best_t, best_mcc = t, m
    return ThresholdResult(
        threshold=best_t,
        mcc_val=best_mcc,
        mcc_test=mcc(confusion_at(test, best_t)),
    )


def cohen_kappa(a: Sequence[int], b: Sequence[int]) -> float:
    """Chance-corrected pairwise agreement between two binary raters.

    When chance agreement is 1 (both raters constant with matching
    marginals) the result is defined as 1 for identical sequences and 0
    otherwise.
    """
    if len(a) != len(b):
        raise LengthMismatch(f"{len(a)} vs {len(b)} ratings")
    if not a:
        raise ValueError("kappa requires at least one rating")
    n = len(a)
    p_o = sum(1 for x, y in zip(a, b) if x == y) / n
    p_a1 = sum(a) / n
    p_b1 = sum(b) / n
    p_e = p_a1 * p_b1 + (1.0 - p_a1) * (1.0 - p_b1)
    if p_e == 1.0:
        return 1.0 if list(a) == list(b) else 0.0
    return (p_o - p_e) / (1.0 - p_e)


def fleiss_kappa(ratings: Sequence[Sequence[int]]) -> float:
    """Multi-rater chance-corrected agreement over a complete items x raters
    binary matrix."""
    if not ratings:
        raise IncompleteMatrix("no items")
    n_raters = len(ratings[0])
    if n_raters < 2:
        raise IncompleteMatrix("need at least two raters")
    for row in ratings:
        if len(row) != n_raters:
            raise IncompleteMatrix("ragged ratings matrix")
        for r in row:
            if r not in (0, 1):
                raise IncompleteMatrix(f"rating {r!r} not in {{0, 1}}")
    n_items = len(ratings)
    pair_denom = n_raters * (n_raters - 1)
    agreements = []
    total_ones = 0
    for row in ratings:
        ones = sum(row)
        zeros = n_raters - ones
        total_ones += ones
        agreements.append((ones * (ones - 1) + zeros * (zeros - 1)) / pair_denom)
    p_bar = math.fsum(agreements) / n_items
    p1 = total_ones / (n_items * n_raters)
    p_e = p1 * p1 + (1.0 - p1) * (1.0 - p1)
    if p_e == 1.0:
        return 1.0 if p_bar == 1.0 else 0.0
    return (p_bar - p_e) / (1.0 - p_e)


@dataclass(frozen=True)
class PairwiseKappa:
    judge_a: str
    judge_b: str
    kappa: float


@dataclass(frozen=True)
class AgreementReport:
    judges: tuple[str, ...]
    fleiss: float
    pairwise: tuple[PairwiseKappa, ...]
    mean_pairwise: float
    max_pairwise: float
    min_pairwise: float
    constant_judges: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "judges": list(self.judges),
            "fleiss_kappa": self.fleiss,
            "pairwise": [
                {"a": p.judge_a, "b": p.judge_b, "kappa": p.kappa} for p in self.pairwise
            ],
            "mean_pairwise": self.mean_pairwise,
            "max_pairwise": self.max_pairwise,
            "min_pairwise": self.min_pairwise,
            "constant_judges": list(self.constant_judges),
        }


def agreement_report(wide, thresholds: dict[str, float]) -> AgreementReport:
    """Pairwise and multi-rater agreement after thresholding each judge's
    probabilities with its own selected threshold.

    ``wide`` is a wide-format prediction table (one row per attempt with one
    probability per judge). Judges whose thresholded decisions are constant
    are flagged: their pairwise kappas fall back to the chance conventions.
    """
    judges = tuple(sorted(wide.judges))
    for j in judges:
        if j not in thresholds:
            raise MissingThreshold(j)
    decisions: dict[str, list[int]] = {
        j: [1 if row.probs[j] >= thresholds[j] else 0 for row in wide.wide_rows]
        for j in judges
    }
    constant = tuple(j for j in judges if len(set(decisions[j])) == 1)
    pairwise = []
    for i, a in enumerate(judges):
        for b in judges[i + 1:]:
            pairwise.append(PairwiseKappa(a, b, cohen_kappa(decisions[a], decisions[b])))
    matrix = [[decisions[j][i] for j in judges] for i in range(len(wide.wide_rows))]
    fleiss = fleiss_kappa(matrix)
    values = [p.kappa for p in pairwise]
    return AgreementReport(
        judges=judges,
        fleiss=fleiss,
        pairwise=tuple(pairwise),
        mean_pairwise=math.fsum(values) / len(values),
        max_pairwise=max(values),
        min_pairwise=min(values),
        constant_judges=constant,
    )
