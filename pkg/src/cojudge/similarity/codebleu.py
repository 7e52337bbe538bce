"""Code-aware similarity: n-gram, keyword-weighted n-gram, and syntax
subtree components blended into a single score.

The data-flow component is never computed; its weight is fixed at zero in
the default profile. When no syntax grammar covers the language, the syntax
weight is redistributed equally onto the two n-gram components and the
result is flagged degraded.

BLEU internals follow the common convention: clipped n-gram precisions up
to order 4, geometric mean with zero precisions floored at 1e-16, and the
exponential brevity penalty for short candidates.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from cojudge.similarity.tokenizers import (
    GRAMMAR_PROFILES,
    Token,
    TokenizedCode,
    resolve_grammar,
    tokenize_code,
)
from cojudge.similarity.syntax import NoGrammar, syntax_match

DEFAULT_WEIGHTS = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0)
ZERO_PRECISION_FLOOR = 1e-16


@dataclass(frozen=True)
class CodeBleuConfig:
    """Component weights are (ngram, weighted_ngram, syntax, dataflow); the
    dataflow weight must be 0. ``grammar`` selects a syntax/lexing profile
    ("cpp", "python", "auto" for per-language resolution, or None);
    ``fallback_mode`` forces the grammarless path."""

    weights: tuple[float, float, float, float] = DEFAULT_WEIGHTS
    max_ngram: int = 4
    keyword_weight: float = 5.0
    grammar: str | None = "auto"
    fallback_mode: bool = False

    def __post_init__(self) -> None:
        if len(self.weights) != 4:
            raise ValueError("weights must have four components")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be non-negative")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {sum(self.weights)!r}")
        if self.weights[3] != 0.0:
            raise ValueError("the data-flow weight must be 0; the component is not computed")
        if self.max_ngram < 1:
            raise ValueError("max_ngram must be >= 1")
        if self.keyword_weight <= 0:
            raise ValueError("keyword_weight must be positive")

    def for_language(self, language: str | None) -> "CodeBleuConfig":
        """Resolve an "auto" grammar against a concrete language token."""
        if self.grammar != "auto":
            return self
        return CodeBleuConfig(
            weights=self.weights,
            max_ngram=self.max_ngram,
            keyword_weight=self.keyword_weight,
            grammar=resolve_grammar(language),
            fallback_mode=self.fallback_mode,
        )


@dataclass(frozen=True)
class CodeBleuResult:
    value: float
    ngram: float
    weighted_ngram: float
    syntax: float | None
    weights_used: tuple[float, float, float, float]
    degraded: bool = False
    both_empty: bool = False
    token_fallback: bool = False


@dataclass(frozen=True)
class ConvergenceRecord:
    participant: str
    problem: str
    turn: int
    value: float


def _ngram_weight(gram: tuple[Token, ...], keyword_weight: float) -> float:
    return math.fsum(
        keyword_weight if tok.is_keyword else 1.0 for tok in gram
    ) / len(gram)


def _bleu(
    candidate: Sequence[Token],
    reference: Sequence[Token],
    max_n: int,
    keyword_weight: float,
) -> float:
    if not candidate:
        return 0.0
    orders = range(1, min(max_n, len(candidate)) + 1)
    log_sum = 0.0
    for n in orders:
        cand_counts = Counter(tuple(candidate[i : i + n]) for i in range(len(candidate) - n + 1))
        ref_counts = Counter(tuple(reference[i : i + n]) for i in range(len(reference) - n + 1))
        numerator = math.fsum(
            min(count, ref_counts.get(gram, 0)) * _ngram_weight(gram, keyword_weight)
            for gram, count in cand_counts.items()
        )
        denominator = math.fsum(
            count * _ngram_weight(gram, keyword_weight)
            for gram, count in cand_counts.items()
        )
        precision = numerator / denominator if denominator > 0 else 0.0
        if precision <= 0.0:
            precision = ZERO_PRECISION_FLOOR
        log_sum += math.log(precision)
    score = math.exp(log_sum / len(orders))
    c, r = len(candidate), len(reference)
    if c < r:
        score *= math.exp(1.0 - r / c)
    return score


def ngram_match(candidate: Sequence[Token], reference: Sequence[Token], max_n: int = 4) -> float:
    """BLEU-style clipped n-gram precision score; 0.0 for an empty candidate."""
    return _bleu(candidate, reference, max_n, keyword_weight=1.0)


def weighted_ngram_match(
    candidate: Sequence[Token],
    reference: Sequence[Token],
    max_n: int = 4,
    keyword_weight: float = 5.0,
) -> float:
    """Like :func:`ngram_match` but each n-gram counts with its mean token
    weight (keywords weigh ``keyword_weight``, everything else 1.0). With no
    keyword-tagged tokens this equals ``ngram_match`` exactly."""
    return _bleu(candidate, reference, max_n, keyword_weight=keyword_weight)


def codebleu_components(
    candidate: str, reference: str, config: CodeBleuConfig | None = None
) -> CodeBleuResult:
    """Compute all components plus the blended score.

    Emptiness conventions: both sides lexing to zero tokens scores 1.0
    (flagged ``both_empty``); an empty candidate against a non-empty
    reference scores 0.0.
    """
    config = config or CodeBleuConfig()
    grammar = None if config.fallback_mode else config.grammar
    if grammar is not None and grammar not in GRAMMAR_PROFILES:
        grammar = None
    cand_tok: TokenizedCode = tokenize_code(candidate, grammar)
    ref_tok: TokenizedCode = tokenize_code(reference, grammar)
    token_fallback = cand_tok.fallback or ref_tok.fallback

    if not cand_tok.tokens and not ref_tok.tokens:
        return CodeBleuResult(
            value=1.0,
            ngram=1.0,
            weighted_ngram=1.0,
            syntax=None,
            weights_used=config.weights,
            degraded=False,
            both_empty=True,
            token_fallback=token_fallback,
        )
    if not cand_tok.tokens:
        return CodeBleuResult(
            value=0.0,
            ngram=0.0,
            weighted_ngram=0.0,
            syntax=None,
            weights_used=config.weights,
            degraded=False,
            both_empty=False,
            token_fallback=token_fallback,
        )

    ngram = ngram_match(cand_tok.tokens, ref_tok.tokens, config.max_ngram)
    weighted = weighted_ngram_match(
        cand_tok.tokens, ref_tok.tokens, config.max_ngram, config.keyword_weight
    )
    try:
        syntax: float | None = syntax_match(candidate, reference, grammar)
    except NoGrammar:
        syntax = None

    alpha, beta, gamma, _delta = config.weights
    if syntax is None:
        alpha += gamma / 2.0
        beta += gamma / 2.0
        gamma = 0.0
        degraded = True
        value = alpha * ngram + beta * weighted
    else:
        degraded = False
        value = alpha * ngram + beta * weighted + gamma * syntax
    return CodeBleuResult(
        value=value,
        ngram=ngram,
        weighted_ngram=weighted,
        syntax=syntax,
        weights_used=(alpha, beta, gamma, 0.0),
        degraded=degraded,
        both_empty=False,
        token_fallback=token_fallback,
    )


def codebleu(candidate: str, reference: str, config: CodeBleuConfig | None = None) -> float:
    return codebleu_components(candidate, reference, config).value


def cb_churn(trajectory: Sequence, config: CodeBleuConfig | None = None) -> list[tuple[int, float]]:
    """1 - codebleu between consecutive turns' codes; defined for k >= 2."""
    config = config or CodeBleuConfig()
    out = []
    for prev, cur in zip(trajectory, trajectory[1:]):
        cfg = config.for_language(cur.language)
        out.append((cur.turn, 1.0 - codebleu(prev.code, cur.code, cfg)))
    return out


def cb_convergence(
    trajectory: Sequence, config: CodeBleuConfig | None = None
) -> list[ConvergenceRecord]:
    """CodeBLEU similarity of every observed turn to the trajectory's first
    accepted code; empty for unsolved trajectories."""
    config = config or CodeBleuConfig()
    accepted = next((a for a in trajectory if a.label == 1), None)
    if accepted is None:
        return []
    out = []
    for a in trajectory:
        cfg = config.for_language(a.language)
        out.append(
            ConvergenceRecord(
                participant=a.participant,
                problem=a.problem,
                turn=a.turn,
                value=codebleu(accepted.code, a.code, cfg),
            )
        )
    return out
