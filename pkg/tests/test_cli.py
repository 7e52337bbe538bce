from __future__ import annotations

import json

import pytest

from cojudge.cli import EXIT_OK, EXIT_STAGE_FAILURE, EXIT_VERIFICATION_REJECTED, main


@pytest.fixture
def workspace(tmp_path):
    corpus = tmp_path / "corpus"
    work = tmp_path / "work"
    config = tmp_path / "config.json"
    config.write_text(
        json.dumps(
            {
                "input_dir": str(corpus),
                "work_dir": str(work),
                "seed": 5,
                "judges": [
                    {"name": "alpha", "kind": "mock"},
                    {"name": "bravo", "kind": "mock"},
                ],
            }
        ),
        encoding="utf-8",
    )
    return corpus, work, config


def test_synth_and_run(workspace):
    corpus, work, config = workspace
    assert main([
        "synth", "--out", str(corpus), "--seed", "5",
        "--participants", "3", "--problems", "2", "--attempts", "14",
    ]) == EXIT_OK
    assert (corpus / "manifest.json").exists()
    assert main(["run", "--config", str(config), "--offline"]) == EXIT_OK
    assert (work / "report.json").exists()
    report = json.loads((work / "report.json").read_text(encoding="utf-8"))
    assert set(report["judges"]) == {"alpha", "bravo"}


def test_single_stage_invocations(workspace):
    corpus, work, config = workspace
    main(["synth", "--out", str(corpus), "--seed", "5",
          "--participants", "3", "--problems", "2", "--attempts", "14"])
    for stage in ("ingest", "split", "serialize"):
        assert main([stage, "--config", str(config), "--offline"]) == EXIT_OK
    assert (work / "requests.jsonl").exists()
    assert main(["run", "--config", str(config), "--offline", "--stage", "judge"]) == EXIT_OK
    assert main(["verify", "--config", str(config), "--offline"]) == EXIT_OK


def test_judges_filter(workspace):
    corpus, work, config = workspace
    main(["synth", "--out", str(corpus), "--seed", "5",
          "--participants", "3", "--problems", "2", "--attempts", "14"])
    assert main(["run", "--config", str(config), "--offline", "--judges", "alpha"]) == EXIT_OK
    report = json.loads((work / "report.json").read_text(encoding="utf-8"))
    assert set(report["judges"]) == {"alpha"}
    with pytest.raises(SystemExit):
        main(["run", "--config", str(config), "--offline", "--judges", "nonexistent"])


def test_stage_failure_exit_code(workspace):
    _, _, config = workspace
    # No corpus generated: ingest fails, exit 3.
    assert main(["ingest", "--config", str(config), "--offline"]) == EXIT_STAGE_FAILURE


def test_verify_rejection_exit_code(workspace):
    corpus, work, config = workspace
    main(["synth", "--out", str(corpus), "--seed", "5",
          "--participants", "3", "--problems", "2", "--attempts", "14"])
    for stage in ("ingest", "split", "serialize", "judge"):
        assert main([stage, "--config", str(config), "--offline"]) == EXIT_OK
    checkpoint = work / "checkpoints" / "judge_alpha.jsonl"
    lines = checkpoint.read_text(encoding="utf-8").strip().splitlines()
    first = json.loads(lines[0])
    first["error"] = "poisoned"
    first["p_ac"] = None
    checkpoint.write_text("\n".join(lines) + "\n" + json.dumps(first) + "\n", encoding="utf-8")
    assert main(["verify", "--config", str(config), "--offline"]) == EXIT_VERIFICATION_REJECTED
