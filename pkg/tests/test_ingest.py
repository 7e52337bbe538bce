from __future__ import annotations

from pathlib import Path

import pytest

from cojudge.ingest import (
    Attempt,
    MissingCode,
    MissingField,
    ParsedSubmission,
    RawSubmission,
    attach_context,
    build_attempt_table,
    load_corpus,
    parse_prompt_logs,
    parse_submission,
)

META = "<div>Participant: U1</div><div>Problem: A</div><div>Verdict: AC</div><div>Submitted: 2026-01-01T10:00:00</div><div>Language: C++</div>"


def _raw_html(body, path="sub.html"):
    return RawSubmission(source_path=Path(path), format="html", body=body)


def test_longest_pre_wins():
    sub = parse_submission(_raw_html(META + "<pre>ab</pre><pre>abcdef</pre>"))
    assert sub.code == "abcdef"


def test_code_fallback_when_no_pre():
    sub = parse_submission(_raw_html(META + "<code>x=1</code>"))
    assert sub.code == "x=1"


def test_script_and_style_removed_from_visible_text():
    from cojudge.ingest import extract_html

    visible, pres, _ = extract_html("<script>junk()</script><style>.x{}</style><pre>main</pre>")
    assert "junk()" not in visible
    assert ".x{}" not in visible
    assert "main" in visible
    assert pres == ["main"]


def test_missing_code():
    with pytest.raises(MissingCode):
        parse_submission(_raw_html(META))
    with pytest.raises(MissingCode):
        parse_submission(_raw_html(META + "<pre>   </pre>"))


def test_missing_fields():
    body = "<div>Problem: A</div><div>Verdict: WA</div><div>Submitted: 2026-01-01T10:00:00</div><pre>x</pre>"
    with pytest.raises(MissingField) as exc:
        parse_submission(_raw_html(body))
    assert exc.value.field == "participant"


def test_bad_timestamp_rejected():
    body = META.replace("2026-01-01T10:00:00", "yesterday") + "<pre>x</pre>"
    with pytest.raises(MissingField) as exc:
        parse_submission(_raw_html(body))
    assert exc.value.field == "timestamp"


def test_metadata_extraction():
    sub = parse_submission(_raw_html(META + "<pre>int main(){}</pre>"))
    assert sub.participant == "U1"
    assert sub.problem == "A"
    assert sub.verdict == "AC"
    assert sub.timestamp == "2026-01-01T10:00:00"
    assert sub.language == "C++"


def test_markdown_fenced_block():
    body = "Participant: U1\nProblem: B\nVerdict: WA\nSubmitted: 2026-01-01T11:00:00\n\n```cpp\nint x;\n```\n\n```cpp\nint main() { return 0; }\n```\n"
    raw = RawSubmission(source_path=Path("a.md"), format="md", body=body)
    sub = parse_submission(raw)
    assert sub.code == "int main() { return 0; }"


def test_plain_text_whole_body_fallback():
    body = "Participant: U1\nProblem: B\nVerdict: WA\nSubmitted: 2026-01-01T11:00:00\nint y = 2;"
    raw = RawSubmission(source_path=Path("a.txt"), format="txt", body=body)
    assert parse_submission(raw).code == body


def test_raw_submission_validation(tmp_path):
    with pytest.raises(ValueError):
        RawSubmission(source_path=Path("x.pdf"), format="pdf", body="hi")
    with pytest.raises(ValueError):
        RawSubmission(source_path=Path("x.txt"), format="txt", body="   \n")


# ----------------------------------------------------------------- prompt logs


def test_prompt_log_aggregation(tmp_path):
    (tmp_path / "b.txt").write_text("p2", encoding="utf-8")
    (tmp_path / "a.txt").write_text("p1", encoding="utf-8")
    ctx = parse_prompt_logs([tmp_path / "b.txt", tmp_path / "a.txt"], "U1")
    assert ctx.aggregated == "p1\n-----\np2"
    assert ctx.record_count == 2
    forward = parse_prompt_logs(sorted(tmp_path.iterdir()), "U1")
    assert forward.aggregated == ctx.aggregated


def test_prompt_log_single_file(tmp_path):
    (tmp_path / "only.txt").write_text("only", encoding="utf-8")
    ctx = parse_prompt_logs([tmp_path / "only.txt"], "U1")
    assert ctx.aggregated == "only"
    assert ctx.record_count == 1


def test_prompt_log_empty_file_skipped(tmp_path):
    (tmp_path / "a.txt").write_text("keep", encoding="utf-8")
    (tmp_path / "b.txt").write_text("   ", encoding="utf-8")
    ctx = parse_prompt_logs(sorted(tmp_path.iterdir()), "U1")
    assert ctx.records == ("keep",)
    assert len(ctx.skipped_files) == 1


# ----------------------------------------------------------------- table build


def _ps(u, p, ts, verdict="WA", path="s.html", code="c"):
    return ParsedSubmission(
        participant=u, problem=p, timestamp=ts, verdict=verdict,
        language="C++", code=code, source_path=Path(path),
    )


def test_turn_assignment_orders_by_time():
    table = build_attempt_table(
        [
            _ps("u", "p", "2026-01-01T11:00:00", path="later.html"),
            _ps("u", "p", "2026-01-01T10:00:00", path="earlier.html"),
        ]
    )
    assert [a.turn for a in table] == [1, 2]
    assert table[0].timestamp == "2026-01-01T10:00:00"
    assert table[0].attempt_id == "u:p:1"


def test_labels_follow_verdict():
    table = build_attempt_table(
        [
            _ps("u", "p", "2026-01-01T10:00:00", verdict="AC"),
            _ps("u", "q", "2026-01-01T10:00:00", verdict="WA"),
            _ps("u", "r", "2026-01-01T10:00:00", verdict="TLE"),
        ]
    )
    labels = {a.problem: a.label for a in table}
    assert labels == {"p": 1, "q": 0, "r": 0}


def test_three_groups_each_turn_one():
    table = build_attempt_table(
        [_ps(u, "p", "2026-01-01T10:00:00") for u in ("a", "b", "c")]
    )
    assert all(a.turn == 1 for a in table)
    assert len({a.attempt_id for a in table}) == 3


def test_duplicate_timestamp_tiebreak_by_path():
    table = build_attempt_table(
        [
            _ps("u", "p", "2026-01-01T10:00:00", path="b.html"),
            _ps("u", "p", "2026-01-01T10:00:00", path="a.html"),
        ]
    )
    assert table[0].turn == 1 and table[1].turn == 2
    assert [a.turn for a in table] == [1, 2]


def test_empty_input():
    assert build_attempt_table([]) == []


def test_turns_are_consecutive_per_group():
    import random

    rng = random.Random(4)
    subs = []
    for u in ("a", "b"):
        for p in ("x", "y"):
            for i in range(rng.randrange(1, 6)):
                subs.append(_ps(u, p, f"2026-01-01T1{i}:00:00"))
    rng.shuffle(subs)
    table = build_attempt_table(subs)
    groups: dict[tuple, list[int]] = {}
    for a in table:
        groups.setdefault((a.participant, a.problem), []).append(a.turn)
    for turns in groups.values():
        assert sorted(turns) == list(range(1, len(turns) + 1))


# ------------------------------------------------------------- attach context


def _ctx(u, text):
    from cojudge.ingest import ParticipantContext

    return ParticipantContext(participant=u, records=(text,), aggregated=text, record_count=1)


def test_attach_context():
    table = build_attempt_table(
        [_ps("u", "p", f"2026-01-01T1{i}:00:00") for i in range(3)]
    )
    out = attach_context(table, {"u": _ctx("u", "X")})
    assert all(a.prompt_text == "X" for a in out)
    assert not any(a.context_missing for a in out)


def test_attach_context_missing_participant():
    table = build_attempt_table([_ps("u", "p", "2026-01-01T10:00:00")])
    out = attach_context(table, {})
    assert out[0].prompt_text == ""
    assert out[0].context_missing


def test_attach_context_no_cross_contamination():
    table = build_attempt_table(
        [
            _ps("u", "p", "2026-01-01T10:00:00"),
            _ps("v", "p", "2026-01-01T10:00:00"),
        ]
    )
    out = attach_context(table, {"u": _ctx("u", "U-text"), "v": _ctx("v", "V-text")})
    by_participant = {a.participant: a.prompt_text for a in out}
    assert by_participant == {"u": "U-text", "v": "V-text"}


def test_attach_context_idempotent():
    table = build_attempt_table(
        [
            _ps("u", "p", "2026-01-01T10:00:00"),
            _ps("v", "p", "2026-01-01T10:00:00"),
        ]
    )
    contexts = {"u": _ctx("u", "U-text")}
    once = attach_context(table, contexts)
    twice = attach_context(once, contexts)
    assert once == twice


# ------------------------------------------------------------------ load_corpus


def _write_corpus(root: Path):
    sub = root / "U1" / "submissions"
    sub.mkdir(parents=True)
    (sub / "001.html").write_text(
        META + "<pre>int main(){return 0;}</pre>", encoding="utf-8"
    )
    (sub / "notes.pdf").write_text("ignored", encoding="utf-8")
    prompts = root / "U1" / "prompts"
    prompts.mkdir(parents=True)
    (prompts / "01.txt").write_text("please help", encoding="utf-8")


def test_load_corpus(tmp_path):
    _write_corpus(tmp_path)
    loaded = load_corpus(tmp_path)
    assert len(loaded.attempts) == 1
    a = loaded.attempts[0]
    assert isinstance(a, Attempt)
    assert a.attempt_id == "U1:A:1"
    assert a.prompt_text == "please help"
    assert a.label == 1
    assert loaded.contexts["U1"].record_count == 1


def test_load_corpus_deterministic(tmp_path):
    _write_corpus(tmp_path)
    first = load_corpus(tmp_path)
    second = load_corpus(tmp_path)
    assert first.attempts == second.attempts


def test_load_corpus_records_bad_files(tmp_path):
    _write_corpus(tmp_path)
    bad = tmp_path / "U1" / "submissions" / "broken.html"
    bad.write_text("<div>Verdict: WA</div><pre>x</pre>", encoding="utf-8")
    loaded = load_corpus(tmp_path)
    assert len(loaded.attempts) == 1
    assert any(w["kind"] == "submission_skipped" for w in loaded.warnings)
