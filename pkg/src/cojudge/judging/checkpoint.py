"""Append-only JSONL checkpoint store with last-write-wins upsert semantics.

Each judge owns one file. Records are only ever appended; re-evaluations of
a failed attempt append a fresh record, and the loader keeps the last record
per attempt_id. A corrupt line aborts loudly rather than silently dropping
results.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Mapping

from cojudge.judging.schema import JudgeOutput


class CheckpointCorrupt(Exception):
    def __init__(self, path: Path, lineno: int, detail: str):
        super().__init__(f"corrupt checkpoint {path} at line {lineno}: {detail}")
        self.path = path
        self.lineno = lineno


class CheckpointStore:
    def __init__(self, path: str | Path, judge: str):
        self.path = Path(path)
        self.judge = judge

    def exists(self) -> bool:
        return self.path.exists()

    def load(self) -> dict[str, JudgeOutput]:
        """Latest record per attempt_id, in insertion order of first sight."""
        if not self.path.exists():
            return {}
        records: dict[str, JudgeOutput] = {}
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    payload = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CheckpointCorrupt(self.path, lineno, exc.msg) from exc
                if not isinstance(payload, dict) or "attempt_id" not in payload:
                    raise CheckpointCorrupt(self.path, lineno, "record has no attempt_id")
                records[payload["attempt_id"]] = JudgeOutput.from_record(payload, self.judge)
        return records

    def append(self, outputs: Iterable[JudgeOutput]) -> None:
        outputs = list(outputs)
        if not outputs:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8", newline="") as fh:
            for out in outputs:
                fh.write(json.dumps(out.to_record(), sort_keys=True) + "\n")
            fh.flush()


def clean_ids(records: Mapping[str, JudgeOutput]) -> set[str]:
    return {aid for aid, rec in records.items() if rec.ok}


def failed_ids(records: Mapping[str, JudgeOutput]) -> set[str]:
    return {aid for aid, rec in records.items() if not rec.ok}
