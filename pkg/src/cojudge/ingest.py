"""Parse raw submission artifacts and prompt logs into a canonical attempt
table with participant-level aggregated contexts.

Artifacts are text-like only (html, htm, md, txt). HTML pages yield visible
text with script/style removed; the submitted code is the longest <pre>
block, with the longest <code> block as a fallback. Markdown and plain text
take the longest fenced code block, or the whole body when no fence exists.
Metadata comes from labeled lines ("Participant: X") in the visible text;
the label patterns are configuration, since contest systems differ.

Attempts are sorted by (participant, problem, timestamp) with the source
path as a stable tie-break, then numbered 1..K within each trajectory; the
acceptance label is 1 exactly when the verdict token is "AC".
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field, replace
from datetime import datetime
from html.parser import HTMLParser
from pathlib import Path
from typing import Iterable, Mapping, Sequence

log = logging.getLogger(__name__)

FORMATS = ("html", "htm", "md", "txt")
DEFAULT_SEPARATOR = "\n-----\n"

DEFAULT_FIELD_PATTERNS: dict[str, tuple[str, ...]] = {
    "participant": (r"^\s*Participant\s*[:：]\s*(\S+)",),
    "problem": (r"^\s*Problem\s*[:：]\s*(\S+)",),
    "verdict": (r"^\s*Verdict\s*[:：]\s*(\S+)", r"^\s*Result\s*[:：]\s*(\S+)"),
    "timestamp": (r"^\s*Submitted\s*[:：]\s*(\S+)", r"^\s*Timestamp\s*[:：]\s*(\S+)"),
    "language": (r"^\s*Language\s*[:：]\s*(\S+)",),
}

_REQUIRED_FIELDS = ("participant", "problem", "verdict", "timestamp")

_FENCE_RE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)


class IngestError(Exception):
    pass


class MissingCode(IngestError):
    def __init__(self, source: str):
        super().__init__(f"no non-empty code block in {source}")


class MissingField(IngestError):
    def __init__(self, name: str, source: str):
        super().__init__(f"field {name!r} not found in {source}")
        self.field = name


@dataclass(frozen=True)
class RawSubmission:
    source_path: Path
    format: str
    body: str

    def __post_init__(self) -> None:
        if self.format not in FORMATS:
            raise ValueError(f"unsupported format {self.format!r}")
        if not self.body.strip():
            raise ValueError(f"empty body in {self.source_path}")

    @classmethod
    def from_path(cls, path: str | Path) -> "RawSubmission":
        path = Path(path)
        fmt = path.suffix.lstrip(".").lower()
        return cls(source_path=path, format=fmt, body=path.read_text(encoding="utf-8"))


@dataclass(frozen=True)
class ParsedSubmission:
    """Metadata and code for one submission, before trajectory assembly."""

    participant: str
    problem: str
    timestamp: str
    verdict: str
    language: str
    code: str
    source_path: Path


@dataclass(frozen=True)
class Attempt:
    attempt_id: str
    participant: str
    problem: str
    turn: int
    code: str
    prompt_text: str
    timestamp: str
    verdict: str
    language: str
    label: int
    context_missing: bool = False


@dataclass(frozen=True)
class ParticipantContext:
    participant: str
    records: tuple[str, ...]
    aggregated: str
    record_count: int
    skipped_files: tuple[str, ...] = ()


class _HtmlVisitor(HTMLParser):
    """Collects visible text (script/style suppressed) and pre/code blocks."""

    _SUPPRESSED = {"script", "style"}
    _BLOCK_END_NEWLINE = {
        "p", "div", "li", "tr", "td", "th", "table", "pre", "h1", "h2", "h3",
        "h4", "h5", "h6", "ul", "ol", "section", "header", "footer", "title",
    }

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.parts: list[str] = []
        self.pre_blocks: list[str] = []
        self.code_blocks: list[str] = []
        self._suppress = 0
        self._captures: list[tuple[str, list[str]]] = []

    def handle_starttag(self, tag, attrs):
        if tag in self._SUPPRESSED:
            self._suppress += 1
        if tag in ("pre", "code"):
            self._captures.append((tag, []))

    def handle_startendtag(self, tag, attrs):
        if tag == "br":
            self.parts.append("\n")

    def handle_endtag(self, tag):
        if tag in self._SUPPRESSED:
            self._suppress = max(0, self._suppress - 1)
            return
        if tag in ("pre", "code"):
            for i in range(len(self._captures) - 1, -1, -1):
                if self._captures[i][0] == tag:
                    _, parts = self._captures.pop(i)
                    block = "".join(parts)
                    if tag == "pre":
                        self.pre_blocks.append(block)
                    else:
                        self.code_blocks.append(block)
                    break
        if tag == "br" or tag in self._BLOCK_END_NEWLINE:
            self.parts.append("\n")

    def handle_data(self, data):
        if self._suppress:
            return
        self.parts.append(data)
        for _, parts in self._captures:
            parts.append(data)

    @property
    def visible_text(self) -> str:
        return "".join(self.parts)


def extract_html(body: str) -> tuple[str, list[str], list[str]]:
    """Visible text plus the collected <pre> and <code> block contents."""
    visitor = _HtmlVisitor()
    visitor.feed(body)
    visitor.close()
    return visitor.visible_text, visitor.pre_blocks, visitor.code_blocks


def _extract_code(raw: RawSubmission) -> tuple[str, str]:
    """Returns (visible_text, code) per the per-format extraction rules."""
    if raw.format in ("html", "htm"):
        visible, pres, codes = extract_html(raw.body)
        blocks = [b for b in pres if b.strip()] or [b for b in codes if b.strip()]
        if not blocks:
            raise MissingCode(str(raw.source_path))
        return visible, max(blocks, key=len).strip("\n")
    fences = _FENCE_RE.findall(raw.body)
    if fences:
        code = max(fences, key=len)
        if not code.strip():
            raise MissingCode(str(raw.source_path))
        return raw.body, code.strip("\n")
    return raw.body, raw.body


def _find_field(name: str, patterns: Sequence[str], text: str) -> str | None:
    for pattern in patterns:
        m = re.search(pattern, text, re.MULTILINE)
        if m:
            return m.group(1)
    return None


def timestamp_key(value: str) -> datetime:
    return datetime.fromisoformat(value.replace("Z", "+00:00"))


def parse_submission(
    raw: RawSubmission,
    field_patterns: Mapping[str, Sequence[str]] | None = None,
) -> ParsedSubmission:
    patterns = field_patterns or DEFAULT_FIELD_PATTERNS
    visible, code = _extract_code(raw)
    values: dict[str, str] = {}
    for name in _REQUIRED_FIELDS:
        found = _find_field(name, patterns.get(name, ()), visible)
        if found is None:
            raise MissingField(name, str(raw.source_path))
        values[name] = found
    try:
        timestamp_key(values["timestamp"])
    except ValueError as exc:
        raise MissingField("timestamp", f"{raw.source_path} ({exc})") from exc
    language = _find_field("language", patterns.get("language", ()), visible) or ""
    return ParsedSubmission(
        participant=values["participant"],
        problem=values["problem"],
        timestamp=values["timestamp"],
        verdict=values["verdict"],
        language=language,
        code=code,
        source_path=raw.source_path,
    )


def _prompt_text(path: Path) -> str:
    body = path.read_text(encoding="utf-8")
    if path.suffix.lstrip(".").lower() in ("html", "htm"):
        visible, _, _ = extract_html(body)
        return visible.strip()
    return body.strip()


def parse_prompt_logs(
    files: Iterable[str | Path],
    participant: str,
    separator: str = DEFAULT_SEPARATOR,
) -> ParticipantContext:
    """Aggregate one participant's prompt logs in deterministic order.

    Files are ordered by filename, then full path. Files with no extractable
    text are skipped (recorded on the context, not fatal).
    """
    ordered = sorted((Path(f) for f in files), key=lambda p: (p.name, str(p)))
    records: list[str] = []
    skipped: list[str] = []
    for path in ordered:
        text = _prompt_text(path)
        if not text:
            log.warning("prompt log %s yielded no text; skipped", path)
            skipped.append(str(path))
            continue
        records.append(text)
    return ParticipantContext(
        participant=participant,
        records=tuple(records),
        aggregated=separator.join(records),
        record_count=len(records),
        skipped_files=tuple(skipped),
    )


def build_attempt_table(submissions: Sequence[ParsedSubmission]) -> list[Attempt]:
    """Order submissions chronologically per trajectory and assign turns,
    attempt ids, and acceptance labels."""
    ordered = sorted(
        submissions,
        key=lambda s: (s.participant, s.problem, timestamp_key(s.timestamp), str(s.source_path)),
    )
    attempts: list[Attempt] = []
    turn = 0
    prev_group: tuple[str, str] | None = None
    for sub in ordered:
        group = (sub.participant, sub.problem)
        turn = turn + 1 if group == prev_group else 1
        attempts.append(
            Attempt(
                attempt_id=f"{sub.participant}:{sub.problem}:{turn}",
                participant=sub.participant,
                problem=sub.problem,
                turn=turn,
                code=sub.code,
                prompt_text="",
                timestamp=sub.timestamp,
                verdict=sub.verdict,
                language=sub.language,
                label=int(sub.verdict == "AC"),
            )
        )
        prev_group = group
    return attempts


def attach_context(
    table: Sequence[Attempt], contexts: Mapping[str, ParticipantContext]
) -> list[Attempt]:
    """Give every attempt its participant's aggregated context. Idempotent;
    participants without a context get an empty text and a flag."""
    out = []
    for a in table:
        ctx = contexts.get(a.participant)
        if ctx is None:
            out.append(replace(a, prompt_text="", context_missing=True))
        else:
            out.append(replace(a, prompt_text=ctx.aggregated, context_missing=False))
    return out


@dataclass
class CorpusLoad:
    attempts: list[Attempt]
    contexts: dict[str, ParticipantContext]
    warnings: list[dict] = field(default_factory=list)


def load_corpus(
    root: str | Path,
    field_patterns: Mapping[str, Sequence[str]] | None = None,
    separator: str = DEFAULT_SEPARATOR,
) -> CorpusLoad:
    """Walk ``root/<participant>/{submissions,prompts}/`` and build the
    attempt table with contexts attached.

    Unreadable or malformed submission files are skipped with a warning
    entry; a missing context only flags the affected attempts.
    """
    root = Path(root)
    if not root.is_dir():
        raise IngestError(f"input directory {root} does not exist")
    warnings: list[dict] = []
    parsed: list[ParsedSubmission] = []
    contexts: dict[str, ParticipantContext] = {}
    for participant_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        sub_dir = participant_dir / "submissions"
        if sub_dir.is_dir():
            for path in sorted(sub_dir.iterdir()):
                if path.suffix.lstrip(".").lower() not in FORMATS:
                    continue
                try:
                    parsed.append(parse_submission(RawSubmission.from_path(path), field_patterns))
                except (IngestError, ValueError) as exc:
                    warnings.append({"kind": "submission_skipped", "path": str(path), "detail": str(exc)})
        prompt_dir = participant_dir / "prompts"
        if prompt_dir.is_dir():
            files = [p for p in sorted(prompt_dir.iterdir()) if p.is_file()]
            ctx = parse_prompt_logs(files, participant_dir.name, separator)
            contexts[participant_dir.name] = ctx
            for skipped in ctx.skipped_files:
                warnings.append({"kind": "empty_prompt_log", "path": skipped, "detail": "no extractable text"})
    table = attach_context(build_attempt_table(parsed), contexts)
    for a in table:
        if a.context_missing:
            warnings.append(
                {"kind": "missing_context", "path": a.attempt_id, "detail": f"participant {a.participant}"}
            )
    return CorpusLoad(attempts=table, contexts=contexts, warnings=warnings)
