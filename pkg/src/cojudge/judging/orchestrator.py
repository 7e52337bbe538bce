"""Checkpointed judge inference with bounded retry, the five-condition
verification gate, and consolidation into long/wide prediction tables.

Resume contract: a rerun skips every attempt that already has an error-free
checkpoint record, re-issues only failures, and a successful re-evaluation
upserts over the old failure, keeping exactly one final record per attempt.
"""

from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from cojudge.judging.adapters import JudgeAdapter
from cojudge.judging.checkpoint import CheckpointStore
from cojudge.judging.schema import JudgeOutput
from cojudge.splitting import JudgeRequest

log = logging.getLogger(__name__)

DEFAULT_SLEEP_SECONDS = 0.2
DEFAULT_SAVE_EVERY = 10
DEFAULT_MAX_RETRIES = 3

VERIFY_CONDITIONS = ("count", "uniq", "missing", "range", "error")


class UnverifiedInput(ValueError):
    """A prediction table was merged without passing verification."""


@dataclass(frozen=True)
class Backoff:
    """Exponential backoff with jitter: base * factor**i, +/- jitter, capped."""

    base: float = 1.0
    factor: float = 2.0
    jitter: float = 0.2
    cap: float = 60.0

    def delay(self, attempt: int, rng: random.Random) -> float:
        raw = min(self.cap, self.base * self.factor**attempt)
        return raw * (1.0 + self.jitter * (2.0 * rng.random() - 1.0))


def run_inference(
    adapter: JudgeAdapter,
    requests: Sequence[JudgeRequest],
    store: CheckpointStore,
    sleep_seconds: float = DEFAULT_SLEEP_SECONDS,
    save_every: int = DEFAULT_SAVE_EVERY,
    sleep_fn: Callable[[float], None] = time.sleep,
) -> dict[str, JudgeOutput]:
    """Run the adapter over every request lacking a clean checkpoint record.

    Results are buffered and flushed at least every ``save_every`` outputs
    (and always on exit, normal or not), so an interrupted run loses nothing
    that was computed. Inter-request pacing of ``sleep_seconds`` is applied
    between adapter calls.
    """
    existing = store.load()
    pending = [r for r in requests if r.attempt_id not in existing or not existing[r.attempt_id].ok]
    log.info("judge %s: %d/%d requests pending", adapter.name, len(pending), len(requests))
    buffer: list[JudgeOutput] = []
    try:
        for i, request in enumerate(pending):
            if i > 0 and sleep_seconds > 0:
                sleep_fn(sleep_seconds)
            buffer.append(adapter.infer(request))
            if len(buffer) >= save_every:
                store.append(buffer)
                buffer.clear()
    finally:
        store.append(buffer)
        buffer.clear()
    return store.load()


@dataclass(frozen=True)
class RetryResult:
    table: dict[str, JudgeOutput]
    exhausted: tuple[str, ...]


def retry_failed(
    adapter: JudgeAdapter,
    requests: Sequence[JudgeRequest],
    store: CheckpointStore,
    max_retries: int = DEFAULT_MAX_RETRIES,
    backoff: Backoff = Backoff(),
    sleep_fn: Callable[[float], None] = time.sleep,
    rng: random.Random | None = None,
) -> RetryResult:
    """Re-issue only attempts whose latest record carries an error.

    Runs at most ``max_retries`` passes with backoff between passes; a
    success overwrites (upserts) the earlier failure. Attempts still failing
    afterwards are reported in ``exhausted``, not raised.
    """
    rng = rng or random.Random(0)
    by_id = {r.attempt_id: r for r in requests}
    table = store.load()
    for attempt in range(max_retries):
        failed = sorted(aid for aid, rec in table.items() if not rec.ok and aid in by_id)
        if not failed:
            break
        if attempt > 0:
            sleep_fn(backoff.delay(attempt - 1, rng))
        log.info("judge %s: retry pass %d over %d failed attempt(s)", adapter.name, attempt + 1, len(failed))
        fresh = [adapter.infer(by_id[aid]) for aid in failed]
        store.append(fresh)
        table = store.load()
    exhausted = tuple(sorted(aid for aid, rec in table.items() if not rec.ok))
    return RetryResult(table=table, exhausted=exhausted)


@dataclass(frozen=True)
class Violation:
    condition: str
    attempt_ids: tuple[str, ...]
    detail: str


@dataclass(frozen=True)
class VerificationResult:
    judge: str
    accepted: bool
    violations: tuple[Violation, ...] = ()

    def to_dict(self) -> dict:
        return {
            "judge": self.judge,
            "accepted": self.accepted,
            "violations": [
                {"condition": v.condition, "attempt_ids": list(v.attempt_ids), "detail": v.detail}
                for v in self.violations
            ],
        }


def verify_outputs(outputs: Sequence[JudgeOutput], attempts: Sequence) -> VerificationResult:
    """The five-condition acceptance gate for one judge's output table.

    Conditions: "count" (one record per attempt), "uniq" (attempt_ids unique
    and exactly covering the attempt table), "missing" (no absent
    probabilities), "range" (probabilities within [0, 1]), "error" (no
    records with the error slot set). Rejection is a return value carrying
    every violated condition with the offending attempt_ids.
    """
    judge = outputs[0].judge if outputs else "unknown"
    expected = [a.attempt_id for a in attempts]
    expected_set = set(expected)
    violations: list[Violation] = []

    if len(outputs) != len(expected):
        violations.append(
            Violation(
                condition="count",
                attempt_ids=tuple(sorted(expected_set - {o.attempt_id for o in outputs})),
                detail=f"{len(outputs)} records for {len(expected)} attempts",
            )
        )
    seen: set[str] = set()
    dupes: set[str] = set()
    for o in outputs:
        if o.attempt_id in seen:
            dupes.add(o.attempt_id)
        seen.add(o.attempt_id)
    uncovered = expected_set - seen
    extraneous = seen - expected_set
    if dupes or uncovered or extraneous or len(seen) != len(expected):
        violations.append(
            Violation(
                condition="uniq",
                attempt_ids=tuple(sorted(dupes | uncovered | extraneous)),
                detail=f"{len(dupes)} duplicated, {len(uncovered)} uncovered, {len(extraneous)} extraneous",
            )
        )
    missing = tuple(sorted(o.attempt_id for o in outputs if o.p_ac is None))
    if missing:
        violations.append(Violation("missing", missing, f"{len(missing)} record(s) without p_ac"))
    out_of_range = tuple(
        sorted(o.attempt_id for o in outputs if o.p_ac is not None and not (0.0 <= o.p_ac <= 1.0))
    )
    if out_of_range:
        violations.append(Violation("range", out_of_range, f"{len(out_of_range)} p_ac outside [0, 1]"))
    errored = tuple(sorted(o.attempt_id for o in outputs if o.error is not None))
    if errored:
        violations.append(Violation("error", errored, f"{len(errored)} record(s) with error set"))

    return VerificationResult(judge=judge, accepted=not violations, violations=tuple(violations))


@dataclass(frozen=True)
class WideRow:
    attempt_id: str
    participant: str
    problem: str
    turn: int
    split: str
    label: int
    probs: dict[str, float] = field(default_factory=dict)
    s_algo: dict[str, int] = field(default_factory=dict)
    s_robust: dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class LongRow:
    attempt_id: str
    judge: str
    p_ac: float
    s_algo: int
    s_robust: int


@dataclass(frozen=True)
class PredictionTable:
    judges: tuple[str, ...]
    long_rows: tuple[LongRow, ...]
    wide_rows: tuple[WideRow, ...]

    def rows_for_split(self, split: str) -> list[WideRow]:
        return [r for r in self.wide_rows if r.split == split]


def merge_predictions(
    tables: Mapping[str, Mapping[str, JudgeOutput] | Sequence[JudgeOutput]],
    attempts: Sequence,
    split_of: Mapping[tuple[str, str], str] | None = None,
) -> PredictionTable:
    """Join verified per-judge outputs with the attempt table by attempt_id.

    Every input table must pass verification (checked here; UnverifiedInput
    otherwise). Long form has |judges| x |attempts| rows; wide form one row
    per attempt with split and label preserved for evaluation.
    """
    normalized: dict[str, list[JudgeOutput]] = {}
    for judge in sorted(tables):
        tbl = tables[judge]
        outputs = list(tbl.values()) if isinstance(tbl, Mapping) else list(tbl)
        result = verify_outputs(outputs, attempts)
        if not result.accepted:
            conditions = ",".join(v.condition for v in result.violations)
            raise UnverifiedInput(f"judge {judge} failed verification ({conditions})")
        normalized[judge] = outputs

    judges = tuple(sorted(normalized))
    by_judge_and_id = {
        (judge, o.attempt_id): o for judge, outputs in normalized.items() for o in outputs
    }
    long_rows = []
    wide_rows = []
    for a in sorted(attempts, key=lambda a: a.attempt_id):
        split = split_of.get((a.participant, a.problem), "") if split_of else ""
        probs: dict[str, float] = {}
        algo: dict[str, int] = {}
        robust: dict[str, int] = {}
        for judge in judges:
            o = by_judge_and_id[(judge, a.attempt_id)]
            probs[judge] = o.p_ac
            algo[judge] = o.s_algo
            robust[judge] = o.s_robust
            long_rows.append(
                LongRow(
                    attempt_id=a.attempt_id,
                    judge=judge,
                    p_ac=o.p_ac,
                    s_algo=o.s_algo,
                    s_robust=o.s_robust,
                )
            )
        wide_rows.append(
            WideRow(
                attempt_id=a.attempt_id,
                participant=a.participant,
                problem=a.problem,
                turn=a.turn,
                split=split,
                label=a.label,
                probs=probs,
                s_algo=algo,
                s_robust=robust,
            )
        )
    long_rows.sort(key=lambda r: (r.attempt_id, r.judge))
    return PredictionTable(judges=judges, long_rows=tuple(long_rows), wide_rows=tuple(wide_rows))
