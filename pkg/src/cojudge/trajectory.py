"""Trajectory-level co-creation analytics.

Works over (participant, problem) trajectories: turn-wise mean judge
confidence and its first difference, first-success outcomes with
right-censoring at the last observed turn, Success@Turn, the Kaplan-Meier
product-limit estimator, participant solved rates, and the prompt-vs-code
dissimilarity summary.

Survival and success curves are computed in exact rational arithmetic
(``fractions.Fraction``): with zero censoring the two are exact complements
of each other, and exposing floats would break that identity in the last
bit. Convert with ``float(...)`` for serialization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from cojudge.similarity.edit_distance import ned


@dataclass(frozen=True)
class TrajectoryPoint:
    participant: str
    problem: str
    turn: int
    mean_confidence: float
    progress: float | None  # None at the first observed turn


@dataclass(frozen=True)
class TrajectoryOutcome:
    """First-success summary of one trajectory.

    ``first_success_turn`` is None when the trajectory was never solved; the
    observed time is then censored at the horizon.
    """

    participant: str
    problem: str
    first_success_turn: int | None
    horizon: int

    @property
    def observed_time(self) -> int:
        if self.first_success_turn is None:
            return self.horizon
        return min(self.first_success_turn, self.horizon)

    @property
    def event(self) -> int:
        return int(self.first_success_turn is not None and self.first_success_turn <= self.horizon)


@dataclass(frozen=True)
class SurvivalPoint:
    time: int
    at_risk: int
    events: int
    survival: Fraction


@dataclass(frozen=True)
class NedSummary:
    mean: float
    std: float
    n: int
    histogram: tuple[int, ...]
    bin_edges: tuple[float, ...]


def group_attempts(table: Sequence) -> dict[tuple[str, str], list]:
    """Attempts keyed by (participant, problem), each group sorted by turn."""
    groups: dict[tuple[str, str], list] = {}
    for a in table:
        groups.setdefault((a.participant, a.problem), []).append(a)
    for rows in groups.values():
        rows.sort(key=lambda a: a.turn)
    return groups


def mean_confidence(wide) -> list[TrajectoryPoint]:
    """Per-attempt mean judge confidence with turn-wise progress.

    ``wide`` is a wide-format prediction table whose rows carry participant,
    problem, turn, and one probability per judge. Progress is defined for
    turns k >= 2 as the difference of consecutive means. The mean uses
    ``math.fsum`` so it is exactly invariant under judge reordering.
    """
    rows = sorted(wide.wide_rows, key=lambda r: (r.participant, r.problem, r.turn))
    points: list[TrajectoryPoint] = []
    prev_key: tuple[str, str] | None = None
    prev_mean = 0.0
    for row in rows:
        mean = math.fsum(row.probs.values()) / len(row.probs)
        key = (row.participant, row.problem)
        progress = mean - prev_mean if key == prev_key else None
        points.append(
            TrajectoryPoint(
                participant=row.participant,
                problem=row.problem,
                turn=row.turn,
                mean_confidence=mean,
                progress=progress,
            )
        )
        prev_key, prev_mean = key, mean
    return points


def build_outcomes(table: Sequence) -> list[TrajectoryOutcome]:
    """Derive first-success outcomes from a labeled attempt table."""
    outcomes = []
    for (u, p), rows in sorted(group_attempts(table).items()):
        first = next((a.turn for a in rows if a.label == 1), None)
        outcomes.append(
            TrajectoryOutcome(
                participant=u,
                problem=p,
                first_success_turn=first,
                horizon=rows[-1].turn,
            )
        )
    return outcomes


def success_at_turn(outcomes: Sequence[TrajectoryOutcome], k_max: int) -> list[tuple[int, Fraction]]:
    """Fraction of trajectories first solved at or before each turn 1..k_max."""
    if not outcomes:
        raise ValueError("no outcomes")
    n = len(outcomes)
    curve = []
    for k in range(1, k_max + 1):
        solved = sum(
            1
            for o in outcomes
            if o.first_success_turn is not None and o.first_success_turn <= k
        )
        curve.append((k, Fraction(solved, n)))
    return curve


def kaplan_meier(outcomes: Sequence[TrajectoryOutcome]) -> list[SurvivalPoint]:
    """Product-limit estimate of remaining-unsolved probability by turn.

    Unsolved trajectories are right-censored at their horizon; at tied times
    events are processed before censorings (censored subjects still count as
    at risk at their own time).
    """
    if not outcomes:
        raise ValueError("no outcomes")
    times = sorted({o.observed_time for o in outcomes})
    survival = Fraction(1)
    points = []
    for t in times:
        at_risk = sum(1 for o in outcomes if o.observed_time >= t)
        events = sum(1 for o in outcomes if o.observed_time == t and o.event == 1)
        if events:
            survival *= Fraction(at_risk - events, at_risk)
        points.append(SurvivalPoint(time=t, at_risk=at_risk, events=events, survival=survival))
    return points


def solved_rate(table: Sequence) -> dict[str, float]:
    """Per participant: fraction of attempted problems with >= 1 accepted attempt."""
    attempted: dict[str, set[str]] = {}
    solved: dict[str, set[str]] = {}
    for a in table:
        attempted.setdefault(a.participant, set()).add(a.problem)
        if a.label == 1:
            solved.setdefault(a.participant, set()).add(a.problem)
    return {
        u: len(solved.get(u, set())) / len(problems)
        for u, problems in sorted(attempted.items())
    }


def prompt_code_ned(
    table: Iterable,
    assignment: Mapping[tuple[str, str], str] | None = None,
    subset: str | None = None,
    histogram_bins: int = 20,
) -> NedSummary:
    """Distribution of NED(prompt_text, code) over attempts, optionally
    restricted to one split. Std is the population standard deviation."""
    values = []
    for a in table:
        if subset is not None:
            if assignment is None:
                raise ValueError("subset filtering requires an assignment")
            if assignment.get((a.participant, a.problem)) != subset:
                continue
        values.append(ned(a.prompt_text, a.code))
    if not values:
        raise ValueError("no attempts in the requested subset")
    n = len(values)
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / n
    edges = [i / histogram_bins for i in range(histogram_bins + 1)]
    counts = [0] * histogram_bins
    for v in values:
        idx = min(histogram_bins - 1, int(v * histogram_bins))
        counts[idx] += 1
    return NedSummary(
        mean=mean,
        std=math.sqrt(var),
        n=n,
        histogram=tuple(counts),
        bin_edges=tuple(edges),
    )
