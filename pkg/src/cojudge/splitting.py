"""Leakage-free grouped splitting and canonical judge-request serialization.

Every (participant, problem) trajectory lands in exactly one of train, val,
or test, so repeated attempts at the same problem can never straddle a
split boundary. Split sizes follow round(ratio * n) for val and test with
the remainder going to train; with stratification the same rule applies
independently inside each group-label stratum (by default: solved vs
unsolved trajectories).

Serialized requests carry only what a judge may see: problem id, language,
truncated source code, and the participant's aggregated prompt context.
Verdicts and labels are never serialized.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from typing import Mapping, Sequence

log = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")
DEFAULT_RATIOS = (0.8, 0.1, 0.1)
DEFAULT_MAX_CODE_CHARS = 12_000
DEFAULT_MAX_PROMPT_CHARS = 12_000

REQUEST_KEYS = ("attempt_id", "split", "problem_id", "language", "source_code", "prompt_text")


class UncoveredGroup(KeyError):
    """An attempt's (participant, problem) group has no split assignment."""


@dataclass(frozen=True)
class SplitConfig:
    ratios: tuple[float, float, float] = DEFAULT_RATIOS
    seed: int = 0
    stratify: bool = True

    def __post_init__(self) -> None:
        if len(self.ratios) != 3:
            raise ValueError("ratios must be (train, val, test)")
        if any(r < 0 for r in self.ratios):
            raise ValueError("ratios must be non-negative")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ValueError(f"ratios must sum to 1, got {sum(self.ratios)!r}")


@dataclass(frozen=True)
class SplitAssignment:
    participant: str
    problem: str
    split: str

    @property
    def group(self) -> tuple[str, str]:
        return (self.participant, self.problem)


@dataclass(frozen=True)
class JudgeRequest:
    attempt_id: str
    split: str
    problem_id: str
    language: str
    source_code: str
    prompt_text: str

    def to_json_line(self) -> str:
        return json.dumps(
            {
                "attempt_id": self.attempt_id,
                "split": self.split,
                "problem_id": self.problem_id,
                "language": self.language,
                "source_code": self.source_code,
                "prompt_text": self.prompt_text,
            },
            sort_keys=True,
        )


def _round_half_up(x: float) -> int:
    return int(x + 0.5)


def split_sizes(n: int, ratios: Sequence[float]) -> tuple[int, int, int]:
    """Val and test get round(ratio * n); train absorbs the remainder."""
    n_val = min(n, _round_half_up(ratios[1] * n))
    n_test = min(n - n_val, _round_half_up(ratios[2] * n))
    return n - n_val - n_test, n_val, n_test


def group_split(
    groups: Sequence[tuple[str, str]],
    config: SplitConfig,
    group_labels: Mapping[tuple[str, str], object] | None = None,
) -> list[SplitAssignment]:
    """Assign each trajectory group to exactly one split.

    When ``config.stratify`` is set, ``group_labels`` partitions the groups
    into strata and the ratio rule runs independently per stratum. A stratum
    with fewer groups than non-zero requested splits goes entirely to train
    (with a warning) rather than producing pathological slices.
    """
    if not groups:
        raise ValueError("no groups to split")
    unique = sorted(set(groups))
    if len(unique) != len(groups):
        raise ValueError("duplicate groups in input")
    if config.stratify:
        labels = group_labels or {}
        strata: dict[str, list[tuple[str, str]]] = {}
        for g in unique:
            strata.setdefault(repr(labels.get(g)), []).append(g)
    else:
        strata = {"all": list(unique)}

    nonzero_splits = sum(1 for r in config.ratios if r > 0)
    assignments: dict[tuple[str, str], str] = {}
    for label in sorted(strata):
        members = strata[label]
        if len(members) < nonzero_splits:
            log.warning(
                "stratum %s has %d group(s), fewer than %d non-empty splits; all assigned to train",
                label, len(members), nonzero_splits,
            )
            for g in members:
                assignments[g] = "train"
            continue
        rng = random.Random(f"{config.seed}:{label}")
        shuffled = list(members)
        rng.shuffle(shuffled)
        _, n_val, n_test = split_sizes(len(members), config.ratios)
        for g in shuffled[:n_val]:
            assignments[g] = "val"
        for g in shuffled[n_val:n_val + n_test]:
            assignments[g] = "test"
        for g in shuffled[n_val + n_test:]:
            assignments[g] = "train"
    return [SplitAssignment(participant=u, problem=p, split=assignments[(u, p)]) for u, p in unique]


def assignment_map(assignments: Sequence[SplitAssignment]) -> dict[tuple[str, str], str]:
    return {a.group: a.split for a in assignments}


def serialize_requests(
    table: Sequence,
    assignments: Sequence[SplitAssignment],
    max_code: int = DEFAULT_MAX_CODE_CHARS,
    max_prompt: int = DEFAULT_MAX_PROMPT_CHARS,
) -> list[JudgeRequest]:
    """One judge request per attempt, head-truncated to the given budgets."""
    splits = assignment_map(assignments)
    requests = []
    for a in table:
        split = splits.get((a.participant, a.problem))
        if split is None:
            raise UncoveredGroup((a.participant, a.problem))
        requests.append(
            JudgeRequest(
                attempt_id=a.attempt_id,
                split=split,
                problem_id=a.problem,
                language=a.language,
                source_code=a.code[:max_code],
                prompt_text=a.prompt_text[:max_prompt],
            )
        )
    return requests
