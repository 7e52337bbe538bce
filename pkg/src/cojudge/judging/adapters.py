"""Judge adapters: a deterministic offline mock and a generic HTTP adapter.

Adapters never raise on transport or schema trouble; every failure mode is
folded into the output's error slot so the orchestrator can checkpoint it
and retry later. Temperature is pinned to 0 for every adapter so repeated
calls are as comparable as the provider allows.
"""

from __future__ import annotations

import hashlib
import json
import os
import urllib.error
import urllib.request
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Protocol

from cojudge.judging.schema import (
    JUDGE_INSTRUCTION_V1,
    JudgeOutput,
    error_output,
    parse_judge_response,
)
from cojudge.splitting import JudgeRequest


@dataclass(frozen=True)
class JudgeAdapterSpec:
    """Declarative description of one judge endpoint.

    ``kind`` is "mock" or "http". For http adapters, ``endpoint`` is the URL,
    ``credential_env`` names the environment variable holding the bearer
    token, and ``response_path`` walks the provider envelope down to the
    judge's text (e.g. ("choices", 0, "message", "content")). ``seed`` only
    matters for mock adapters.
    """

    name: str
    kind: str = "mock"
    endpoint: str = ""
    credential_env: str = ""
    temperature: float = 0.0
    max_output_tokens: int = 1024
    repair_max_output_tokens: int | None = None
    response_path: tuple = ()
    seed: int = 0
    timeout_seconds: float = 60.0

    def __post_init__(self) -> None:
        if self.kind not in ("mock", "http"):
            raise ValueError(f"unknown adapter kind {self.kind!r}")
        if self.temperature != 0.0:
            raise ValueError("temperature must be 0 for all judges")
        if self.kind == "http" and not self.endpoint:
            raise ValueError(f"http adapter {self.name!r} needs an endpoint")


class JudgeAdapter(Protocol):
    name: str

    def infer(self, request: JudgeRequest) -> JudgeOutput: ...


def mock_judge(request: JudgeRequest, seed: int) -> JudgeOutput:
    """Deterministic pseudo-judge: all fields derive from a stable hash of
    (attempt_id, seed). Always schema-valid; used offline and in tests."""
    digest = hashlib.sha256(f"{request.attempt_id}|{seed}".encode("utf-8")).digest()
    p_ac = int.from_bytes(digest[0:8], "big") / float(1 << 64)
    s_algo = 1 + digest[8] % 5
    s_robust = 1 + digest[9] % 5
    rationale = f"deterministic mock verdict {digest[:4].hex()}"
    raw = json.dumps(
        {"p_ac": p_ac, "s_algo": s_algo, "s_robust": s_robust, "rationale": rationale},
        sort_keys=True,
    )
    return JudgeOutput(
        attempt_id=request.attempt_id,
        judge="mock",
        p_ac=p_ac,
        s_algo=s_algo,
        s_robust=s_robust,
        rationale=rationale,
        raw_response=raw,
        received_at="",
    )


@dataclass(frozen=True)
class MockJudgeAdapter:
    name: str
    seed: int = 0

    def infer(self, request: JudgeRequest) -> JudgeOutput:
        out = mock_judge(request, self.seed)
        return JudgeOutput(
            attempt_id=out.attempt_id,
            judge=self.name,
            p_ac=out.p_ac,
            s_algo=out.s_algo,
            s_robust=out.s_robust,
            rationale=out.rationale,
            raw_response=out.raw_response,
            received_at="",
        )


def _walk_path(payload, path):
    node = payload
    for step in path:
        if isinstance(step, int):
            node = node[step]
        else:
            node = node[step]
    return node


class HttpJudgeAdapter:
    """POSTs the instruction plus request fields as JSON and expects the
    judge's schema object back (optionally nested in a provider envelope).

    On parse failure a single repair call is issued with the larger repair
    token budget before the attempt is marked failed.
    """

    def __init__(self, spec: JudgeAdapterSpec, instruction: str = JUDGE_INSTRUCTION_V1):
        self.spec = spec
        self.name = spec.name
        self.instruction = instruction

    def _credential(self) -> str | None:
        if not self.spec.credential_env:
            return None
        return os.environ.get(self.spec.credential_env)

    def _post(self, request: JudgeRequest, max_tokens: int) -> str:
        payload = {
            "instruction": self.instruction,
            "temperature": self.spec.temperature,
            "max_output_tokens": max_tokens,
            "input": {
                "attempt_id": request.attempt_id,
                "problem_id": request.problem_id,
                "language": request.language,
                "source_code": request.source_code,
                "prompt_text": request.prompt_text,
            },
        }
        headers = {"Content-Type": "application/json"}
        token = self._credential()
        if token:
            headers["Authorization"] = f"Bearer {token}"
        req = urllib.request.Request(
            self.spec.endpoint,
            data=json.dumps(payload).encode("utf-8"),
            headers=headers,
            method="POST",
        )
        with urllib.request.urlopen(req, timeout=self.spec.timeout_seconds) as resp:
            body = resp.read().decode("utf-8")
        if not self.spec.response_path:
            return body
        envelope = json.loads(body)
        return str(_walk_path(envelope, self.spec.response_path))

    def infer(self, request: JudgeRequest) -> JudgeOutput:
        received_at = datetime.now(timezone.utc).isoformat()
        if self.spec.credential_env and self._credential() is None:
            return error_output(
                request.attempt_id, self.name,
                f"transport failure: credential {self.spec.credential_env} not set",
                received_at=received_at,
            )
        try:
            text = self._post(request, self.spec.max_output_tokens)
        except urllib.error.HTTPError as exc:
            reason = "rate limited" if exc.code == 429 else f"transport failure: HTTP {exc.code}"
            return error_output(request.attempt_id, self.name, reason, received_at=received_at)
        except (urllib.error.URLError, TimeoutError, OSError, json.JSONDecodeError, LookupError, TypeError) as exc:
            return error_output(
                request.attempt_id, self.name, f"transport failure: {exc}", received_at=received_at
            )
        out = parse_judge_response(request.attempt_id, self.name, text, received_at)
        if out.ok:
            return out
        repair_budget = self.spec.repair_max_output_tokens
        if repair_budget is None:
            return out
        try:
            text = self._post(request, repair_budget)
        except Exception as exc:  # repair is best-effort; keep the first error context
            return error_output(
                request.attempt_id, self.name,
                f"{out.error}; repair failed: {exc}", received_at=received_at,
            )
        return parse_judge_response(request.attempt_id, self.name, text, received_at)


def build_adapter(spec: JudgeAdapterSpec, instruction: str = JUDGE_INSTRUCTION_V1) -> JudgeAdapter:
    if spec.kind == "mock":
        return MockJudgeAdapter(name=spec.name, seed=spec.seed)
    return HttpJudgeAdapter(spec, instruction)


def adapter_infer(spec: JudgeAdapterSpec, request: JudgeRequest) -> JudgeOutput:
    """One-shot inference against a spec; failures come back in the error
    slot, never as exceptions."""
    return build_adapter(spec).infer(request)
