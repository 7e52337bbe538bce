"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines as they complete.
"""

from __future__ import annotations

import hashlib
import itertools
import math
import random
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest

from cojudge import metrics as M
from cojudge.judging.checkpoint import CheckpointStore
from cojudge.judging.orchestrator import merge_predictions, run_inference, verify_outputs
from cojudge.judging.schema import JudgeOutput
from cojudge.pipeline.config import default_offline_config
from cojudge.pipeline.stages import load_attempts, load_wide, run_pipeline
from cojudge.pipeline.synth import generate_synthetic_corpus
from cojudge.similarity.codebleu import CodeBleuConfig, cb_churn, codebleu, ngram_match, weighted_ngram_match
from cojudge.similarity.edit_distance import levenshtein, ned
from cojudge.similarity.tokenizers import Token
from cojudge.splitting import JudgeRequest, SplitConfig, group_split, split_sizes
from cojudge.trajectory import TrajectoryOutcome, kaplan_meier, success_at_turn
from oracles import (
    average_precision_recount,
    levenshtein_recursive,
    mcc_grid_scan,
    roc_auc_pairwise,
)


@contextmanager
def criterion(number: int, title: str):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number:02d} {title}: FAIL")
        raise
    print(f"ACCEPTANCE {number:02d} {title}: PASS")


def _random_scored_set(rng: random.Random, n_max: int = 50, coarse: bool = False):
    n = rng.randrange(2, n_max + 1)
    if coarse:
        probs = [rng.randrange(0, 5) / 4 for _ in range(n)]
    else:
        probs = [rng.random() for _ in range(n)]
    labels = [rng.randrange(2) for _ in range(n)]
    return probs, labels


def test_criterion_01_metric_oracle_equivalence():
    with criterion(1, "metric oracle equivalence"):
        rng = random.Random(20260810)
        start = time.perf_counter()
        for i in range(200):
            probs, labels = _random_scored_set(rng, coarse=(i % 3 == 0))
            s = M.ScoredSet(tuple(probs), tuple(labels))
            roc_expected = roc_auc_pairwise(probs, labels)
            roc_got = M.roc_auc(s)
            if roc_expected is None:
                assert roc_got is None
            else:
                assert abs(roc_got - roc_expected) <= 1e-12
            ap_expected = average_precision_recount(probs, labels)
            ap_got = M.pr_auc(s)
            if ap_expected is None:
                assert ap_got is None
            else:
                assert abs(ap_got - ap_expected) <= 1e-12
        elapsed = time.perf_counter() - start
        assert elapsed < 5.0, f"took {elapsed:.2f}s, budget 5s"


def test_criterion_02_hand_fixture_exactness():
    with criterion(2, "hand-fixture exactness"):
        assert abs(M.mcc(M.ConfusionMatrix(tp=3, tn=4, fp=1, fn=2)) - 10 / math.sqrt(600)) <= 1e-12
        assert abs(M.cohen_kappa([1, 1, 0, 0], [1, 0, 0, 0]) - 0.5) <= 1e-12
        assert abs(M.fleiss_kappa([[1, 1, 0], [0, 0, 0]]) - 0.25) <= 1e-12
        s = M.ScoredSet((0.5, 0.5, 0.5, 0.5), (1, 0, 1, 1))
        assert abs(M.log_loss(s) - math.log(2)) <= 1e-12


def test_criterion_03_calibration_sanity():
    with criterion(3, "calibration sanity"):
        start = time.perf_counter()
        rng = np.random.default_rng(424242)
        n = 100_000
        probs = rng.uniform(0.0, 1.0, size=n)
        labels = (rng.uniform(0.0, 1.0, size=n) < probs).astype(int)
        s = M.ScoredSet(tuple(probs.tolist()), tuple(labels.tolist()))
        assert M.ece(s, bins=15) <= 0.02
        assert abs(M.brier(s) - 1.0 / 6.0) <= 0.01
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0, f"took {elapsed:.2f}s, budget 10s"


def test_criterion_04_val_test_protocol():
    with criterion(4, "VAL->TEST threshold protocol"):
        rng = random.Random(99)
        for _ in range(100):
            n = rng.randrange(8, 120)
            # Probabilities on a 0.01 grid: spacing far above the 1e-4 scan
            # resolution, so the grid cannot miss any candidate's value.
            probs = [rng.randrange(0, 101) / 100 for _ in range(n)]
            labels = [rng.randrange(2) for _ in range(n)]
            if len(set(labels)) < 2:
                labels[0], labels[-1] = 0, 1
            val = M.ScoredSet(tuple(probs), tuple(labels))
            sel = M.select_threshold(val, val)
            grid_best, _grid_t = mcc_grid_scan(probs, labels, grid_points=10_000)
            assert abs(sel.mcc_val - grid_best) <= 1e-9
            assert sel.mcc_test == sel.mcc_val  # test = val: no re-selection


def test_criterion_05_leakage_freedom():
    with criterion(5, "grouped split leakage freedom"):
        rng = random.Random(7)
        for seed in range(1000):
            n = rng.randrange(3, 120)
            groups = [(f"u{i}", f"p{rng.randrange(9)}") for i in range(n)]
            groups = sorted(set(groups))
            config = SplitConfig(ratios=(0.8, 0.1, 0.1), seed=seed, stratify=False)
            assignments = group_split(groups, config)
            seen = [a.group for a in assignments]
            assert len(seen) == len(set(seen)) == len(groups)  # exactly one split each
            counts = {"train": 0, "val": 0, "test": 0}
            for a in assignments:
                counts[a.split] += 1
            expected = split_sizes(len(groups), config.ratios)
            assert (counts["train"], counts["val"], counts["test"]) == expected


def _fault_attempts(n=5):
    from types import SimpleNamespace

    return [SimpleNamespace(attempt_id=f"a{i}", participant="u", problem="p", turn=i, label=0)
            for i in range(1, n + 1)]


def _clean_outputs(attempts, judge="j"):
    return [JudgeOutput(a.attempt_id, judge, 0.5, 3, 3) for a in attempts]


def test_criterion_06_verification_gate():
    with criterion(6, "verification gate fault classes"):
        attempts = _fault_attempts()
        clean = _clean_outputs(attempts)
        assert verify_outputs(clean, attempts).accepted

        cases = {
            "count": clean[:-1],                                   # missing attempt_id
            "uniq": clean[:-1] + [clean[0]],                       # duplicate attempt_id
            "missing": clean[:-1] + [JudgeOutput("a5", "j", None, 3, 3)],
            "range": clean[:-1] + [JudgeOutput("a5", "j", 1.5, 3, 3)],
            "error": clean[:-1] + [JudgeOutput("a5", "j", 0.5, 3, 3, error="boom")],
        }
        for expected_condition, table in cases.items():
            result = verify_outputs(table, attempts)
            assert not result.accepted, expected_condition
            named = {v.condition for v in result.violations}
            assert expected_condition in named, f"{expected_condition} not in {named}"


def test_criterion_07_edit_distance_oracle():
    with criterion(7, "edit-distance oracle equivalence"):
        start = time.perf_counter()
        strings = [""]
        for length in range(1, 9):
            strings.extend("".join(t) for t in itertools.product("abc", repeat=length))
        assert len(strings) == 9841
        distances: dict[tuple[str, str], int] = {}
        checked = 0
        for s in strings:
            assert ned(s, s) == 0.0
            for t in strings:
                if len(s) + len(t) > 10:
                    continue
                d = levenshtein(s, t)
                assert d == levenshtein_recursive(s, t)
                distances[(s, t)] = d
                checked += 1
        assert checked == 654_460  # all ordered pairs, lengths <= 8, |s|+|t| <= 10
        for (s, t), d in distances.items():
            assert distances[(t, s)] == d  # ned symmetry via shared denominator
        elapsed = time.perf_counter() - start
        assert elapsed < 60.0, f"took {elapsed:.1f}s, budget 60s"


CPP_SNIPPETS = [
    "int main() { return 0; }",
    "int add(int a, int b) { return a + b; }",
    "for (int i = 0; i < n; i++) { s += i; }",
    "if (x > 0) { y = 1; } else { y = 2; }",
    "while (n) { n >>= 1; c++; }",
    "int f(int n) { return n < 2 ? 1 : f(n-1) + f(n-2); }",
    "double mean(double* v, int n) { double s = 0; for (int i = 0; i < n; i++) s += v[i]; return s / n; }",
    "struct Point { int x; int y; };",
    "long long pow2(int k) { return 1LL << k; }",
    "void swap(int& a, int& b) { int t = a; a = b; b = t; }",
]

PY_SNIPPETS = [
    "print(sum(int(x) for x in input().split()))",
    "def f(n):\n    return n * n\n",
    "for i in range(10):\n    total += i\n",
    "if x > 0:\n    y = 1\nelse:\n    y = 2\n",
    "while n:\n    n //= 2\n    c += 1\n",
    "def fib(n):\n    return 1 if n < 2 else fib(n-1) + fib(n-2)\n",
    "data = sys.stdin.read().split()\n",
    "acc = 0\nfor v in values:\n    acc += v\nprint(acc)\n",
    "squares = [i * i for i in range(100)]\n",
    "def gcd(a, b):\n    while b:\n        a, b = b, a % b\n    return a\n",
]


def test_criterion_08_codebleu_identities():
    with criterion(8, "codebleu identities"):
        corpus = [(code, "cpp") for code in CPP_SNIPPETS] + [(code, "python") for code in PY_SNIPPETS]
        assert len(corpus) == 20
        for code, grammar in corpus:
            cfg = CodeBleuConfig(grammar=grammar)
            assert abs(codebleu(code, code, cfg) - 1.0) <= 1e-9, code

        from types import SimpleNamespace

        traj = [
            SimpleNamespace(participant="u", problem="p", turn=k, label=0,
                            code=CPP_SNIPPETS[0], language="C++")
            for k in (1, 2, 3)
        ]
        for _, value in cb_churn(traj, CodeBleuConfig()):
            assert value == pytest.approx(0.0, abs=1e-9)

        rng = random.Random(3)
        for _ in range(50):
            cand = [Token(f"t{rng.randrange(8)}") for _ in range(rng.randrange(1, 12))]
            ref = [Token(f"t{rng.randrange(8)}") for _ in range(rng.randrange(1, 12))]
            assert weighted_ngram_match(cand, ref, keyword_weight=5.0) == ngram_match(cand, ref)

        assert CodeBleuConfig().weights == (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0)


def test_criterion_09_survival_consistency():
    with criterion(9, "survival/success complementarity"):
        rng = random.Random(5)
        for _ in range(100):
            outcomes = []
            for i in range(rng.randrange(1, 40)):
                horizon = rng.randrange(1, 9)
                first = rng.randrange(1, horizon + 1)  # zero censoring
                outcomes.append(TrajectoryOutcome("u", f"p{i}", first, horizon))
            points = kaplan_meier(outcomes)
            curve = dict(success_at_turn(outcomes, max(p.time for p in points)))
            for p in points:
                assert 1 - p.survival == curve[p.time]  # exact, both rational

        fixture = [
            TrajectoryOutcome("u", "a", 1, 1),
            TrajectoryOutcome("u", "b", None, 2),
            TrajectoryOutcome("u", "c", 3, 3),
            TrajectoryOutcome("u", "d", None, 3),
        ]
        final = {p.time: p.survival for p in kaplan_meier(fixture)}
        assert abs(float(final[3]) - 0.375) <= 1e-12
        assert final[3] == Fraction(3, 8)


@pytest.fixture(scope="module")
def offline_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance_e2e")
    timings = {}
    works = []
    for tag in ("a", "b"):
        t0 = time.perf_counter()
        corpus = root / f"corpus_{tag}"
        work = root / f"work_{tag}"
        manifest = generate_synthetic_corpus(corpus, seed=2026)
        cfg = default_offline_config(corpus, work, seed=2026)
        report = run_pipeline(cfg)
        timings[tag] = time.perf_counter() - t0
        works.append((cfg, report, manifest))
    return works, timings


def test_criterion_10_end_to_end_offline(offline_runs):
    with criterion(10, "end-to-end offline determinism"):
        works, timings = offline_runs
        (cfg_a, report_a, manifest), (cfg_b, _report_b, _) = works

        assert manifest.participants == 15
        assert manifest.problems == 13
        assert manifest.attempts == 517
        assert manifest.trajectories == 184

        assert timings["a"] < 120.0, f"full offline run took {timings['a']:.1f}s"

        payload = report_a.to_dict()
        assert len(payload["judges"]) == 4
        for name, block in payload["judges"].items():
            assert not block.get("absent", False), f"judge {name} missing from report"
            for key in ("roc_auc", "pr_auc", "log_loss", "brier", "ece15",
                        "t_star", "mcc_val", "mcc_test"):
                assert key in block
                if block[key] is None:
                    assert key in block["absent_reasons"]
        assert not payload["agreement"].get("absent", False)
        assert payload["trajectory"]["success_at_turn"]
        assert payload["trajectory"]["survival"]
        assert payload["provenance"]["codebleu"]["weights"] == [1 / 3, 1 / 3, 1 / 3, 0.0]

        report_bytes_a = (cfg_a.work_dir / "report.json").read_bytes()
        report_bytes_b = (cfg_b.work_dir / "report.json").read_bytes()
        assert hashlib.sha256(report_bytes_a).hexdigest() == hashlib.sha256(report_bytes_b).hexdigest()


class _BudgetExhausted(RuntimeError):
    pass


class _BudgetedMockAdapter:
    """Mock adapter that dies after a fixed number of successful calls."""

    def __init__(self, name, seed, budget):
        from cojudge.judging.adapters import MockJudgeAdapter

        self._inner = MockJudgeAdapter(name=name, seed=seed)
        self.name = name
        self.budget = budget
        self.calls = 0

    def infer(self, request):
        if self.calls >= self.budget:
            raise _BudgetExhausted()
        self.calls += 1
        return self._inner.infer(request)


def test_criterion_11_resume_safety(tmp_path):
    with criterion(11, "judge-stage resume safety"):
        from cojudge.judging.adapters import MockJudgeAdapter
        from types import SimpleNamespace

        n = 35
        save_every = 10
        requests = [
            JudgeRequest(f"u:p:{k}", "train", "p", "C++", f"int x = {k};", "ctx")
            for k in range(1, n + 1)
        ]
        attempts = [SimpleNamespace(attempt_id=r.attempt_id, participant="u", problem="p",
                                    turn=k, label=k % 2)
                    for k, r in enumerate(requests, start=1)]

        baseline_store = CheckpointStore(tmp_path / "baseline.jsonl", "m")
        baseline = run_inference(
            MockJudgeAdapter(name="m", seed=9), requests, baseline_store,
            sleep_seconds=0, save_every=save_every,
        )
        baseline_merge = merge_predictions({"m": baseline}, attempts)

        for boundary in range(save_every, n, save_every):
            store = CheckpointStore(tmp_path / f"interrupt_{boundary}.jsonl", "m")
            adapter = _BudgetedMockAdapter("m", seed=9, budget=boundary)
            with pytest.raises(_BudgetExhausted):
                run_inference(adapter, requests, store, sleep_seconds=0, save_every=save_every)
            assert len(store.load()) == boundary  # flushed exactly at the boundary
            resumed = run_inference(
                MockJudgeAdapter(name="m", seed=9), requests, store,
                sleep_seconds=0, save_every=save_every,
            )
            assert resumed == baseline
            merged = merge_predictions({"m": resumed}, attempts)
            assert merged == baseline_merge
