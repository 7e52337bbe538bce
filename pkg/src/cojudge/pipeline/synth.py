"""Deterministic synthetic corpus generator for offline runs.

Produces a directory tree of per-participant submission artifacts and
prompt logs that the ingest stage can parse with its default extraction
rules. The default shape approximates a real small contest: 15
participants, 13 problems, ~517 attempts over ~184 trajectories, heavy-
tailed attempts-per-trajectory, front-loaded first successes, and per-turn
code churn. Same seed, byte-identical tree.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

CONTEST_DATE = "2025-11-08"
TRAJECTORY_DENSITY = 184 / 195  # occupied share of the participant-problem grid
MAX_TURNS = 30

_FAIL_VERDICTS = ("WA", "WA", "WA", "TLE", "RE", "CE")
_LANGS = ("C++", "C++", "C++", "C++", "C++", "C++", "C++", "Python", "Python", "C")

_TOPIC_WORDS = (
    "array prefix sums sliding window",
    "graph shortest path bfs queue",
    "dynamic programming knapsack table",
    "string matching rolling hash",
    "greedy interval scheduling sort",
    "number theory gcd modular arithmetic",
    "binary search monotone predicate",
    "tree traversal recursion depth",
    "simulation grid steps boundary",
    "combinatorics counting pairs",
    "two pointers subarray sum",
    "stack parentheses matching",
    "geometry points distance",
)

_PROMPT_OPENERS = (
    "please explain why this fails on the sample",
    "rewrite the loop so it does not overflow",
    "what is the time complexity of this approach",
    "the judge says wrong answer on case",
    "help me handle the edge case where n is zero",
    "convert this idea into code that reads from stdin",
    "why does this get a runtime error for large inputs",
    "suggest a faster data structure here",
)


@dataclass(frozen=True)
class SynthManifest:
    participants: int
    problems: int
    attempts: int
    trajectories: int
    solved_trajectories: int
    prompt_logs: int

    def to_dict(self) -> dict:
        return {
            "participants": self.participants,
            "problems": self.problems,
            "attempts": self.attempts,
            "trajectories": self.trajectories,
            "solved_trajectories": self.solved_trajectories,
            "prompt_logs": self.prompt_logs,
        }


def _cpp_code(rng: random.Random, problem_idx: int, variant: int) -> str:
    factor = 1 + (problem_idx * 7 + variant) % 9
    lines = [
        "#include <iostream>",
        "using namespace std;",
        "int main() {",
        "    int n; cin >> n;",
        "    long long acc = 0;",
        "    for (int i = 0; i < n; i++) {",
        f"        int v; cin >> v; acc += v * {factor};",
        "    }",
    ]
    if variant % 3 == 1:
        lines.insert(4, f"    int limit = {rng.randrange(10, 99)};")
    if variant % 4 == 2:
        lines.append(f"    if (acc < 0) acc += {rng.randrange(2, 50)};")
    lines.append("    cout << acc << endl;")
    lines.append("    return 0;")
    lines.append("}")
    return "\n".join(lines)


def _python_code(rng: random.Random, problem_idx: int, variant: int) -> str:
    factor = 1 + (problem_idx * 5 + variant) % 7
    lines = [
        "import sys",
        "def solve():",
        "    data = sys.stdin.read().split()",
        "    n = int(data[0])",
        f"    acc = sum(int(x) * {factor} for x in data[1:n+1])",
    ]
    if variant % 3 == 1:
        lines.append(f"    acc = acc % {rng.randrange(100, 999)}")
    lines.append("    print(acc)")
    lines.append("solve()")
    return "\n".join(lines)


def _code_for(rng: random.Random, language: str, problem_idx: int, variant: int) -> str:
    if language == "Python":
        return _python_code(rng, problem_idx, variant)
    return _cpp_code(rng, problem_idx, variant)


def _mutate(rng: random.Random, code: str) -> str:
    """Small per-turn revision: tweak a constant or add a line."""
    lines = code.split("\n")
    roll = rng.random()
    if roll < 0.4:
        idx = rng.randrange(len(lines))
        lines[idx] = lines[idx].replace("acc", "total") if "acc" in lines[idx] else lines[idx] + " "
    elif roll < 0.7:
        lines.insert(rng.randrange(1, len(lines)), f"    // attempt fix {rng.randrange(100)}"
                     if lines[0].startswith("#include") else f"    # retry {rng.randrange(100)}")
    else:
        return code + "\n"
    return "\n".join(lines)


def _timestamp(rng: random.Random, minute: int) -> str:
    hour = 10 + minute // 60
    return f"{CONTEST_DATE}T{hour:02d}:{minute % 60:02d}:{rng.randrange(60):02d}+09:00"


def _html_artifact(meta: dict, code: str, rng: random.Random) -> str:
    decoy = f"<script>trackPageView({rng.randrange(9999)});</script>"
    rows = "".join(
        f"<div>{label}: {value}</div>"
        for label, value in (
            ("Participant", meta["participant"]),
            ("Problem", meta["problem"]),
            ("Verdict", meta["verdict"]),
            ("Submitted", meta["timestamp"]),
            ("Language", meta["language"]),
        )
    )
    extra = "<pre>sample output</pre>" if rng.random() < 0.3 else ""
    safe = code.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    return f"<html><head>{decoy}</head><body>{rows}{extra}<pre>{safe}</pre></body></html>"


def _md_artifact(meta: dict, code: str) -> str:
    fence_lang = "python" if meta["language"] == "Python" else "cpp"
    return (
        f"Participant: {meta['participant']}\n"
        f"Problem: {meta['problem']}\n"
        f"Verdict: {meta['verdict']}\n"
        f"Submitted: {meta['timestamp']}\n"
        f"Language: {meta['language']}\n\n"
        f"```{fence_lang}\n{code}\n```\n"
    )


def _txt_artifact(meta: dict, code: str) -> str:
    return (
        f"Participant: {meta['participant']}\n"
        f"Problem: {meta['problem']}\n"
        f"Verdict: {meta['verdict']}\n"
        f"Submitted: {meta['timestamp']}\n"
        f"Language: {meta['language']}\n\n"
        f"```\n{code}\n```\n"
    )


def generate_synthetic_corpus(
    out_dir: str | Path,
    seed: int = 0,
    participants: int = 15,
    problems: int = 13,
    attempts: int = 517,
) -> SynthManifest:
    """Write a synthetic corpus under ``out_dir`` and return its manifest."""
    if attempts < participants:
        raise ValueError("attempts must be >= participants")
    out = Path(out_dir)
    rng = random.Random(seed)

    users = [f"P{i + 1:03d}" for i in range(participants)]
    probs = [chr(ord("A") + i) for i in range(problems)]
    cells = [(u, p) for u in users for p in probs]

    n_traj = max(1, round(len(cells) * TRAJECTORY_DENSITY))
    n_traj = min(n_traj, len(cells), attempts)
    chosen: list[tuple[str, str]] = []
    if n_traj >= participants:
        # Guarantee every participant at least one trajectory.
        for u in users:
            chosen.append((u, rng.choice(probs)))
        rest = [c for c in cells if c not in set(chosen)]
        chosen.extend(rng.sample(rest, n_traj - participants))
    else:
        chosen = rng.sample(cells, n_traj)
    chosen.sort()

    counts = {cell: 1 for cell in chosen}
    hot = rng.sample(chosen, max(1, n_traj // 12))
    extra = attempts - n_traj
    for _ in range(extra):
        for _ in range(64):
            cell = rng.choice(hot) if rng.random() < 0.55 else rng.choice(chosen)
            if counts[cell] < MAX_TURNS:
                counts[cell] += 1
                break

    solved = 0
    attempt_rows: dict[str, list[dict]] = {u: [] for u in users}
    for cell in chosen:
        u, p = cell
        k_total = counts[cell]
        problem_idx = probs.index(p)
        language = rng.choice(_LANGS)
        is_solved = rng.random() < 0.85
        if is_solved:
            solved += 1
            first_ac = 1 if (k_total == 1 or rng.random() < 0.82) else rng.randrange(2, k_total + 1)
        else:
            first_ac = None
        minute = rng.randrange(0, 180)
        code = _code_for(rng, language, problem_idx, variant=rng.randrange(6))
        for turn in range(1, k_total + 1):
            if turn > 1:
                code = _mutate(rng, code)
                minute += rng.randrange(2, 9)  # strictly increasing within a trajectory
            if first_ac is None:
                verdict = rng.choice(_FAIL_VERDICTS)
            elif turn < first_ac:
                verdict = rng.choice(_FAIL_VERDICTS)
            elif turn == first_ac:
                verdict = "AC"
            else:
                verdict = "AC" if rng.random() < 0.5 else rng.choice(_FAIL_VERDICTS)
            attempt_rows[u].append(
                {
                    "participant": u,
                    "problem": p,
                    "verdict": verdict,
                    "timestamp": _timestamp(rng, minute),
                    "language": language,
                    "code": code,
                }
            )

    total_attempts = 0
    prompt_logs = 0
    for u in users:
        sub_dir = out / u / "submissions"
        sub_dir.mkdir(parents=True, exist_ok=True)
        rows = sorted(attempt_rows[u], key=lambda r: (r["problem"], r["timestamp"]))
        for i, meta in enumerate(rows):
            roll = rng.random()
            if roll < 0.7:
                name, body = f"{i:03d}_{meta['problem']}.html", _html_artifact(meta, meta["code"], rng)
            elif roll < 0.9:
                name, body = f"{i:03d}_{meta['problem']}.md", _md_artifact(meta, meta["code"])
            else:
                name, body = f"{i:03d}_{meta['problem']}.txt", _txt_artifact(meta, meta["code"])
            (sub_dir / name).write_text(body, encoding="utf-8")
            total_attempts += 1

        prompt_dir = out / u / "prompts"
        prompt_dir.mkdir(parents=True, exist_ok=True)
        style = rng.sample(_TOPIC_WORDS, k=rng.randrange(2, 5))
        for i in range(rng.randrange(3, 9)):
            opener = rng.choice(_PROMPT_OPENERS)
            topic = rng.choice(style)
            lines = [
                f"{opener} {rng.randrange(100)}",
                f"thinking about {topic}",
                f"problem {rng.choice(probs)} from today, idea {u.lower()}{i}",
            ]
            (prompt_dir / f"{i:02d}.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
            prompt_logs += 1

    manifest = SynthManifest(
        participants=participants,
        problems=problems,
        attempts=total_attempts,
        trajectories=n_traj,
        solved_trajectories=solved,
        prompt_logs=prompt_logs,
    )
    (out / "manifest.json").write_text(
        json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest
