"""Strict judge-output schema: parsing, one-pass repair, validation.

A judge must answer with a single JSON object carrying an acceptance
probability, two 1..5 rubric scores, and a short rationale. Anything else
lands in the record's error slot instead of raising, so the orchestrator
can retry just the failures later.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

RATIONALE_MAX_CHARS = 2000
SCORE_MIN, SCORE_MAX = 1, 5

SCHEMA_KEYS = ("p_ac", "s_algo", "s_robust", "rationale")

JUDGE_INSTRUCTION_V1 = (
    "You are grading one submission attempt from a timed programming "
    "contest where participants may use AI assistance. You receive the "
    "problem id, the programming language, the submitted source code, and "
    "the participant's aggregated assistant-conversation context. "
    "Respond with exactly one JSON object and nothing else, with keys: "
    '"p_ac" (number in [0,1]: probability the attempt passes the official '
    'judge), "s_algo" (integer 1-5: algorithmic adequacy, 1 severely '
    'inadequate, 5 highly adequate), "s_robust" (integer 1-5: robustness '
    'and constraint handling on the same scale), and "rationale" (a short '
    "justification)."
)

_FENCE_RE = re.compile(r"```(?:json)?\s*\n(.*?)```", re.DOTALL)


@dataclass(frozen=True)
class JudgeOutput:
    attempt_id: str
    judge: str
    p_ac: float | None
    s_algo: int | None
    s_robust: int | None
    rationale: str = ""
    error: str | None = None
    raw_response: str = ""
    received_at: str = ""

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_record(self) -> dict:
        """Checkpoint-line form (judge name lives in the file, not the line)."""
        return {
            "attempt_id": self.attempt_id,
            "p_ac": self.p_ac,
            "s_algo": self.s_algo,
            "s_robust": self.s_robust,
            "rationale": self.rationale,
            "error": self.error,
            "raw_response": self.raw_response,
            "received_at": self.received_at,
        }

    @classmethod
    def from_record(cls, record: dict, judge: str) -> "JudgeOutput":
        return cls(
            attempt_id=record["attempt_id"],
            judge=judge,
            p_ac=record.get("p_ac"),
            s_algo=record.get("s_algo"),
            s_robust=record.get("s_robust"),
            rationale=record.get("rationale") or "",
            error=record.get("error"),
            raw_response=record.get("raw_response") or "",
            received_at=record.get("received_at") or "",
        )


def error_output(attempt_id: str, judge: str, error: str, raw_response: str = "",
                 received_at: str = "") -> JudgeOutput:
    return JudgeOutput(
        attempt_id=attempt_id,
        judge=judge,
        p_ac=None,
        s_algo=None,
        s_robust=None,
        error=error,
        raw_response=raw_response,
        received_at=received_at,
    )


def extract_json_object(text: str) -> str | None:
    """Single repair pass: strip code fences, then take the first balanced
    top-level object. Returns None when no balanced object exists."""
    fenced = _FENCE_RE.search(text)
    if fenced:
        text = fenced.group(1)
    start = text.find("{")
    if start < 0:
        return None
    depth = 0
    in_string = False
    escape = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escape:
                escape = False
            elif ch == "\\":
                escape = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
    return None


def _check_probability(value) -> tuple[float | None, str | None]:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return None, "p_ac not a number"
    p = float(value)
    if not 0.0 <= p <= 1.0:
        return None, "p out of range"
    return p, None


def _check_score(name: str, value) -> tuple[int | None, str | None]:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return None, f"{name} not a number"
    if float(value) != int(value):
        return None, f"{name} not an integer"
    score = int(value)
    if not SCORE_MIN <= score <= SCORE_MAX:
        return None, f"{name} out of range"
    return score, None


def parse_judge_response(
    attempt_id: str, judge: str, raw_text: str, received_at: str = ""
) -> JudgeOutput:
    """Validate a raw judge response against the strict schema.

    Any violation produces a record with the error slot set (and the raw
    text preserved for auditing), never an exception.
    """

    def fail(reason: str) -> JudgeOutput:
        return error_output(attempt_id, judge, reason, raw_response=raw_text, received_at=received_at)

    candidate = extract_json_object(raw_text)
    if candidate is None:
        return fail("unparseable response: no JSON object found")
    try:
        payload = json.loads(candidate)
    except json.JSONDecodeError as exc:
        return fail(f"unparseable response: {exc.msg}")
    if not isinstance(payload, dict):
        return fail("unparseable response: not an object")
    for key in SCHEMA_KEYS:
        if key not in payload:
            return fail(f"missing field {key}")
    p_ac, err = _check_probability(payload["p_ac"])
    if err:
        return fail(err)
    s_algo, err = _check_score("s_algo", payload["s_algo"])
    if err:
        return fail(err)
    s_robust, err = _check_score("s_robust", payload["s_robust"])
    if err:
        return fail(err)
    rationale = payload["rationale"]
    if not isinstance(rationale, str):
        return fail("rationale not a string")
    return JudgeOutput(
        attempt_id=attempt_id,
        judge=judge,
        p_ac=p_ac,
        s_algo=s_algo,
        s_robust=s_robust,
        rationale=rationale[:RATIONALE_MAX_CHARS],
        raw_response=raw_text,
        received_at=received_at,
    )
