"""Levenshtein distance, normalized edit distance, and consecutive-turn churn.

The normalized form divides the raw edit count by ``max(1, |s|, |t|)`` so the
value always lands in [0, 1] and the empty/empty pair is 0 rather than
undefined.
"""

from __future__ import annotations

from typing import Sequence

# Above this many DP cells the vectorized row recurrence is faster than the
# plain Python loop.
_NUMPY_CELL_CUTOFF = 10_000

_FIELD_ATTRS = {"prompt": "prompt_text", "code": "code"}


def levenshtein(s: str, t: str) -> int:
    """Minimum number of single-character insertions, deletions and
    substitutions needed to turn ``s`` into ``t``."""
    if s == t:
        return 0
    if not s:
        return len(t)
    if not t:
        return len(s)
    if len(t) > len(s):
        s, t = t, s
    if len(s) * len(t) >= _NUMPY_CELL_CUTOFF:
        return _levenshtein_rows_numpy(s, t)
    prev = list(range(len(t) + 1))
    for i, cs in enumerate(s, start=1):
        cur = [i] + [0] * len(t)
        for j, ct in enumerate(t, start=1):
            cur[j] = min(
                prev[j] + 1,
                cur[j - 1] + 1,
                prev[j - 1] + (cs != ct),
            )
        prev = cur
    return prev[-1]


def _levenshtein_rows_numpy(s: str, t: str) -> int:
    # Row recurrence with the prefix-minimum trick: the in-row dependency
    # cur[j] = min(base[j], cur[j-1] + 1) unrolls to
    # cur[j] = min(base[k] + (j - k) for k <= j), a running minimum of
    # base[k] - k. Integer arithmetic throughout, so results are exact.
    import numpy as np

    codes = np.array([ord(c) for c in t], dtype=np.int64)
    m = len(t)
    jj = np.arange(1, m + 1, dtype=np.int64)
    prev = np.arange(m + 1, dtype=np.int64)
    for i, cs in enumerate(s, start=1):
        cost = (codes != ord(cs)).astype(np.int64)
        base = np.minimum(prev[1:] + 1, prev[:-1] + cost)
        shifted = base - jj
        np.minimum.accumulate(shifted, out=shifted)
        cur = np.empty(m + 1, dtype=np.int64)
        cur[0] = i
        cur[1:] = np.minimum(base, np.minimum(shifted + jj, i + jj))
        prev = cur
    return int(prev[m])


def ned(s: str, t: str) -> float:
    """Levenshtein distance normalized by ``max(1, |s|, |t|)``."""
    return levenshtein(s, t) / max(1, len(s), len(t))


def consecutive_churn(trajectory: Sequence, field: str) -> list[tuple[int, float]]:
    """Normalized edit distance between consecutive turns of one trajectory.

    ``trajectory`` must be sorted by turn; ``field`` selects which attempt
    text to compare ("prompt" or "code"). Defined for turns k >= 2, so a
    single-attempt trajectory yields an empty list.
    """
    attr = _FIELD_ATTRS.get(field)
    if attr is None:
        raise ValueError(f"unknown churn field {field!r}; expected one of {sorted(_FIELD_ATTRS)}")
    out: list[tuple[int, float]] = []
    for prev, cur in zip(trajectory, trajectory[1:]):
        out.append((cur.turn, ned(getattr(prev, attr), getattr(cur, attr))))
    return out
