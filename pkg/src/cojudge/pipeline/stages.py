"""Composable pipeline stages over on-disk artifacts.

Every stage reads its inputs from the work directory and writes its own
artifact atomically, so any stage can be re-run in isolation and an
interrupted pipeline resumes from what is on disk. Stage outputs are
deterministic functions of (corpus bytes, config, seed); nothing in the
report depends on wall-clock time, which is what makes same-seed runs
byte-identical.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from cojudge import __version__
from cojudge import metrics as M
from cojudge._io import (
    atomic_write_csv,
    atomic_write_json,
    atomic_write_text,
    float_repr,
    read_csv_rows,
    read_json,
    sha256_text,
)
from cojudge.ingest import Attempt, load_corpus
from cojudge.judging.adapters import build_adapter
from cojudge.judging.checkpoint import CheckpointStore
from cojudge.judging.orchestrator import (
    LongRow,
    PredictionTable,
    VerificationResult,
    WideRow,
    merge_predictions,
    retry_failed,
    run_inference,
    verify_outputs,
)
from cojudge.judging.schema import JudgeOutput
from cojudge.pipeline.config import PipelineConfig
from cojudge.promptmap import EmptyCorpus, build_prompt_map
from cojudge.similarity.codebleu import cb_convergence, codebleu_components
from cojudge.similarity.edit_distance import consecutive_churn
from cojudge.splitting import JudgeRequest, group_split, serialize_requests
from cojudge.trajectory import (
    build_outcomes,
    group_attempts,
    kaplan_meier,
    mean_confidence,
    prompt_code_ned,
    solved_rate,
    success_at_turn,
)

log = logging.getLogger(__name__)

STAGES = ("ingest", "split", "serialize", "judge", "verify", "merge", "eval", "trajectory", "report")

ATTEMPTS_CSV_HEADER = (
    "attempt_id", "participant", "problem", "turn", "timestamp",
    "language", "verdict", "label", "code_path", "prompt_chars",
)


class StageFailure(Exception):
    def __init__(self, stage: str, cause: str):
        super().__init__(f"stage {stage} failed: {cause}")
        self.stage = stage
        self.cause = cause


def _safe_id(attempt_id: str) -> str:
    return attempt_id.replace(":", "_").replace("/", "_")


def _checkpoint_path(cfg: PipelineConfig, judge: str) -> Path:
    return cfg.work_dir / "checkpoints" / f"judge_{judge}.jsonl"


# ------------------------------------------------------------------ ingest


def stage_ingest(cfg: PipelineConfig) -> None:
    corpus = load_corpus(cfg.input_dir)
    work = cfg.work_dir
    rows = []
    for a in corpus.attempts:
        code_path = f"code/{_safe_id(a.attempt_id)}.txt"
        atomic_write_text(work / code_path, a.code)
        rows.append(
            (a.attempt_id, a.participant, a.problem, a.turn, a.timestamp,
             a.language, a.verdict, a.label, code_path, len(a.prompt_text))
        )
    atomic_write_csv(work / "attempts.csv", ATTEMPTS_CSV_HEADER, rows)
    contexts = {
        u: {
            "records": list(ctx.records),
            "aggregated": ctx.aggregated,
            "record_count": ctx.record_count,
            "skipped_files": [Path(p).name for p in ctx.skipped_files],
        }
        for u, ctx in corpus.contexts.items()
    }
    atomic_write_json(work / "contexts.json", contexts)
    atomic_write_json(
        work / "ingest_report.json",
        {
            "attempts": len(corpus.attempts),
            "participants": len({a.participant for a in corpus.attempts}),
            "contexts": len(corpus.contexts),
            "warnings": [
                {"kind": w["kind"], "path": Path(w["path"]).name, "detail": w["detail"]}
                for w in corpus.warnings
            ],
        },
    )


def load_attempts(cfg: PipelineConfig) -> list[Attempt]:
    work = cfg.work_dir
    try:
        rows = read_csv_rows(work / "attempts.csv")
        contexts = read_json(work / "contexts.json")
    except FileNotFoundError as exc:
        raise StageFailure("load", f"missing ingest artifact: {exc}") from exc
    attempts = []
    for row in rows:
        ctx = contexts.get(row["participant"])
        attempts.append(
            Attempt(
                attempt_id=row["attempt_id"],
                participant=row["participant"],
                problem=row["problem"],
                turn=int(row["turn"]),
                code=(work / row["code_path"]).read_text(encoding="utf-8"),
                prompt_text=ctx["aggregated"] if ctx else "",
                timestamp=row["timestamp"],
                verdict=row["verdict"],
                language=row["language"],
                label=int(row["label"]),
                context_missing=ctx is None,
            )
        )
    return attempts


# ------------------------------------------------------------------- split


def stage_split(cfg: PipelineConfig) -> None:
    attempts = load_attempts(cfg)
    groups = sorted({(a.participant, a.problem) for a in attempts})
    solved = {g: 0 for g in groups}
    for a in attempts:
        if a.label == 1:
            solved[(a.participant, a.problem)] = 1
    assignments = group_split(groups, cfg.split_config(), solved)
    atomic_write_csv(
        cfg.work_dir / "splits.csv",
        ("participant", "problem", "split"),
        [(a.participant, a.problem, a.split) for a in assignments],
    )


def load_assignment(cfg: PipelineConfig) -> dict[tuple[str, str], str]:
    rows = read_csv_rows(cfg.work_dir / "splits.csv")
    return {(r["participant"], r["problem"]): r["split"] for r in rows}


# --------------------------------------------------------------- serialize


def stage_serialize(cfg: PipelineConfig) -> None:
    attempts = load_attempts(cfg)
    assignment = load_assignment(cfg)
    from cojudge.splitting import SplitAssignment

    assignments = [SplitAssignment(u, p, s) for (u, p), s in sorted(assignment.items())]
    requests = serialize_requests(attempts, assignments, cfg.max_code_chars, cfg.max_prompt_chars)
    lines = "".join(r.to_json_line() + "\n" for r in requests)
    atomic_write_text(cfg.work_dir / "requests.jsonl", lines)


def load_requests(cfg: PipelineConfig) -> list[JudgeRequest]:
    requests = []
    with open(cfg.work_dir / "requests.jsonl", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                requests.append(JudgeRequest(**json.loads(line)))
    return requests


# ------------------------------------------------------------------- judge


def _judge_one(cfg: PipelineConfig, spec, requests) -> str:
    adapter = build_adapter(spec)
    store = CheckpointStore(_checkpoint_path(cfg, spec.name), spec.name)
    table = run_inference(
        adapter, requests, store,
        sleep_seconds=cfg.sleep_seconds, save_every=cfg.save_every,
    )
    if any(not rec.ok for rec in table.values()):
        result = retry_failed(adapter, requests, store, max_retries=cfg.max_retries)
        if result.exhausted:
            log.warning("judge %s: %d attempt(s) still failing after retries",
                        spec.name, len(result.exhausted))
    return spec.name


def stage_judge(cfg: PipelineConfig) -> None:
    """Per-judge inference with checkpointing; judges run in parallel."""
    requests = load_requests(cfg)
    if not cfg.judges:
        raise StageFailure("judge", "no judges configured")
    with ThreadPoolExecutor(max_workers=len(cfg.judges)) as pool:
        futures = [pool.submit(_judge_one, cfg, spec, requests) for spec in cfg.judges]
        for fut in futures:
            fut.result()


def _load_checkpoint_outputs(cfg: PipelineConfig, judge: str) -> list[JudgeOutput]:
    store = CheckpointStore(_checkpoint_path(cfg, judge), judge)
    return list(store.load().values())


# ------------------------------------------------------------------ verify


def stage_verify(cfg: PipelineConfig) -> dict[str, VerificationResult]:
    attempts = load_attempts(cfg)
    results = {}
    for spec in cfg.judges:
        outputs = _load_checkpoint_outputs(cfg, spec.name)
        result = verify_outputs(outputs, attempts)
        results[spec.name] = VerificationResult(
            judge=spec.name, accepted=result.accepted, violations=result.violations
        )
    atomic_write_json(
        cfg.work_dir / "verification.json",
        {name: r.to_dict() for name, r in sorted(results.items())},
    )
    return results


def load_verification(cfg: PipelineConfig) -> dict[str, dict]:
    return read_json(cfg.work_dir / "verification.json")


def verified_judges(cfg: PipelineConfig) -> list[str]:
    return sorted(name for name, r in load_verification(cfg).items() if r["accepted"])


# ------------------------------------------------------------------- merge


def stage_merge(cfg: PipelineConfig) -> None:
    attempts = load_attempts(cfg)
    assignment = load_assignment(cfg)
    judges = verified_judges(cfg)
    tables = {name: _load_checkpoint_outputs(cfg, name) for name in judges}
    if tables:
        merged = merge_predictions(tables, attempts, assignment)
    else:
        merged = PredictionTable(judges=(), long_rows=(), wide_rows=())
    atomic_write_csv(
        cfg.work_dir / "predictions_long.csv",
        ("attempt_id", "judge", "p_ac", "s_algo", "s_robust"),
        [(r.attempt_id, r.judge, float_repr(r.p_ac), r.s_algo, r.s_robust) for r in merged.long_rows],
    )
    header = ["attempt_id", "participant", "problem", "turn", "split", "label"]
    for j in merged.judges:
        header += [f"p_{j}", f"algo_{j}", f"robust_{j}"]
    rows = []
    for r in merged.wide_rows:
        row = [r.attempt_id, r.participant, r.problem, r.turn, r.split, r.label]
        for j in merged.judges:
            row += [float_repr(r.probs[j]), r.s_algo[j], r.s_robust[j]]
        rows.append(row)
    atomic_write_csv(cfg.work_dir / "predictions_wide.csv", header, rows)


def load_wide(cfg: PipelineConfig) -> PredictionTable:
    rows = read_csv_rows(cfg.work_dir / "predictions_wide.csv")
    if not rows:
        return PredictionTable(judges=(), long_rows=(), wide_rows=())
    judges = tuple(sorted(k[2:] for k in rows[0] if k.startswith("p_")))
    wide_rows = []
    long_rows = []
    for r in rows:
        probs = {j: float(r[f"p_{j}"]) for j in judges}
        algo = {j: int(r[f"algo_{j}"]) for j in judges}
        robust = {j: int(r[f"robust_{j}"]) for j in judges}
        wide_rows.append(
            WideRow(
                attempt_id=r["attempt_id"],
                participant=r["participant"],
                problem=r["problem"],
                turn=int(r["turn"]),
                split=r["split"],
                label=int(r["label"]),
                probs=probs,
                s_algo=algo,
                s_robust=robust,
            )
        )
        for j in judges:
            long_rows.append(LongRow(r["attempt_id"], j, probs[j], algo[j], robust[j]))
    long_rows.sort(key=lambda x: (x.attempt_id, x.judge))
    return PredictionTable(judges=judges, long_rows=tuple(long_rows), wide_rows=tuple(wide_rows))


# -------------------------------------------------------------------- eval


def _scored_set(rows, judge) -> M.ScoredSet | None:
    if not rows:
        return None
    return M.ScoredSet(
        tuple(r.probs[judge] for r in rows), tuple(r.label for r in rows)
    )


def stage_eval(cfg: PipelineConfig) -> None:
    wide = load_wide(cfg)
    ece_key = f"ece{cfg.ece_bins}"
    val_rows = wide.rows_for_split("val")
    test_rows = wide.rows_for_split("test")
    metrics_dir = cfg.work_dir / "metrics"
    thresholds: dict[str, float] = {}
    for judge in wide.judges:
        block: dict = {"judge": judge}
        absent: dict[str, str] = {}
        val = _scored_set(val_rows, judge)
        test = _scored_set(test_rows, judge)
        if val is None:
            for key in ("roc_auc", "pr_auc", "log_loss", "brier", ece_key, "t_star", "mcc_val", "mcc_test"):
                block[key] = None
                absent[key] = "empty validation split"
        elif test is None:
            sel = M.select_threshold(val, val)
            thresholds[judge] = sel.threshold
            block.update(t_star=sel.threshold, mcc_val=sel.mcc_val, degenerate_val=sel.degenerate_val)
            for key in ("roc_auc", "pr_auc", "log_loss", "brier", ece_key, "mcc_test"):
                block[key] = None
                absent[key] = "empty test split"
        else:
            sel = M.select_threshold(val, test)
            thresholds[judge] = sel.threshold
            roc = M.roc_auc(test)
            pr = M.pr_auc(test)
            block.update(
                roc_auc=roc,
                pr_auc=pr,
                log_loss=M.log_loss(test),
                brier=M.brier(test),
                t_star=sel.threshold,
                mcc_val=sel.mcc_val,
                mcc_test=sel.mcc_test,
                degenerate_val=sel.degenerate_val,
            )
            block[ece_key] = M.ece(test, cfg.ece_bins)
            if roc is None:
                absent["roc_auc"] = "test split has a single class"
            if pr is None:
                absent["pr_auc"] = "test split has no positive attempts"
        block["absent_reasons"] = absent
        atomic_write_json(metrics_dir / f"judge_metrics_{judge}.json", block)

    if len(wide.judges) >= 2 and test_rows and all(j in thresholds for j in wide.judges):
        test_table = PredictionTable(judges=wide.judges, long_rows=(), wide_rows=tuple(test_rows))
        report = M.agreement_report(test_table, thresholds)
        payload = report.to_dict()
    else:
        if len(wide.judges) < 2:
            reason = "fewer than two verified judges"
        elif not test_rows:
            reason = "empty test split"
        else:
            reason = "missing thresholds"
        payload = {"absent": True, "reason": reason}
    atomic_write_json(metrics_dir / "agreement.json", payload)


# --------------------------------------------------------------- trajectory


def _write_trajectory_csvs(cfg: PipelineConfig) -> dict:
    work = cfg.work_dir
    out_dir = work / "trajectory"
    attempts = load_attempts(cfg)
    assignment = load_assignment(cfg)
    wide = load_wide(cfg)
    meta: dict = {}

    if wide.judges:
        points = mean_confidence(wide)
    else:
        points = []
        meta["struggle_curves"] = "no verified judges"
    atomic_write_csv(
        out_dir / "trajectory_points.csv",
        ("participant", "problem", "turn", "p_bar", "delta_p_bar"),
        [
            (p.participant, p.problem, p.turn, float_repr(p.mean_confidence), float_repr(p.progress))
            for p in points
        ],
    )
    progress_of = {(p.participant, p.problem, p.turn): p.progress for p in points}

    outcomes = build_outcomes(attempts)
    atomic_write_csv(
        out_dir / "outcomes.csv",
        ("participant", "problem", "T", "delta"),
        [(o.participant, o.problem, o.observed_time, o.event) for o in outcomes],
    )
    k_max = max(o.horizon for o in outcomes)
    curve = success_at_turn(outcomes, k_max)
    atomic_write_csv(
        out_dir / "success_at_turn.csv",
        ("k", "success"),
        [(k, float_repr(float(v))) for k, v in curve],
    )
    survival = kaplan_meier(outcomes)
    atomic_write_csv(
        out_dir / "survival.csv",
        ("t", "at_risk", "events", "survival"),
        [(p.time, p.at_risk, p.events, float_repr(float(p.survival))) for p in survival],
    )

    rates = solved_rate(attempts)
    contexts = read_json(work / "contexts.json")
    aggregated = {u: c["aggregated"] for u, c in contexts.items()}
    try:
        map_points, fallback = build_prompt_map(aggregated, rates, cfg.seed)
        meta["prompt_map_fallback"] = fallback
    except EmptyCorpus:
        map_points = []
        meta["prompt_map"] = "empty prompt corpus"
    atomic_write_csv(
        out_dir / "prompt_map.csv",
        ("participant", "z1", "z2", "solved_rate"),
        [(p.participant, float_repr(p.x), float_repr(p.y), float_repr(p.solved_rate)) for p in map_points],
    )

    try:
        ned_summary = prompt_code_ned(attempts, assignment, "test")
        atomic_write_json(
            out_dir / "ned_summary.json",
            {
                "mean": ned_summary.mean,
                "std": ned_summary.std,
                "n": ned_summary.n,
                "histogram": list(ned_summary.histogram),
                "bin_edges": list(ned_summary.bin_edges),
                "subset": "test",
            },
        )
    except ValueError:
        meta["ned_summary"] = "no attempts in the test split"
        atomic_write_json(out_dir / "ned_summary.json", {"absent": True, "reason": meta["ned_summary"]})

    churn_rows = []
    convergence_rows = []
    degraded_pairs = 0
    for (u, p), rows in sorted(group_attempts(attempts).items()):
        for rec in cb_convergence(rows, cfg.codebleu):
            convergence_rows.append((rec.participant, rec.problem, rec.turn, float_repr(rec.value)))
        if len(rows) < 2:
            continue
        ned_prompt = dict(consecutive_churn(rows, "prompt"))
        ned_code = dict(consecutive_churn(rows, "code"))
        for prev, cur in zip(rows, rows[1:]):
            cb = codebleu_components(prev.code, cur.code, cfg.codebleu.for_language(cur.language))
            degraded_pairs += int(cb.degraded)
            progress = progress_of.get((u, p, cur.turn))
            churn_rows.append(
                (
                    u, p, cur.turn,
                    float_repr(ned_prompt[cur.turn]),
                    float_repr(ned_code[cur.turn]),
                    float_repr(1.0 - cb.value),
                    float_repr(progress),
                    int(cb.degraded),
                )
            )
    atomic_write_csv(
        out_dir / "churn.csv",
        ("participant", "problem", "turn", "ned_prompt", "ned_code", "cb_churn", "delta_p_bar", "degraded_flag"),
        churn_rows,
    )
    atomic_write_csv(
        out_dir / "convergence.csv",
        ("participant", "problem", "turn", "conv_cb"),
        convergence_rows,
    )
    meta["codebleu_degraded_pairs"] = degraded_pairs
    atomic_write_json(out_dir / "meta.json", meta)
    return meta


def stage_trajectory(cfg: PipelineConfig) -> None:
    _write_trajectory_csvs(cfg)


# ------------------------------------------------------------------ report


@dataclass
class EvaluationReport:
    judges: dict
    agreement: dict
    trajectory: dict
    curves: dict
    provenance: dict

    def to_dict(self) -> dict:
        return {
            "judges": self.judges,
            "agreement": self.agreement,
            "trajectory": self.trajectory,
            "curves": self.curves,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "EvaluationReport":
        return cls(
            judges=payload["judges"],
            agreement=payload["agreement"],
            trajectory=payload["trajectory"],
            curves=payload["curves"],
            provenance=payload["provenance"],
        )


def _roc_points(s: M.ScoredSet) -> list[tuple[float, float]]:
    n_pos = sum(s.labels)
    n_neg = s.n - n_pos
    if n_pos == 0 or n_neg == 0:
        return []
    order = sorted(range(s.n), key=lambda i: -s.probs[i])
    points = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    while i < s.n:
        j = i
        while j + 1 < s.n and s.probs[order[j + 1]] == s.probs[order[i]]:
            j += 1
        for k in range(i, j + 1):
            if s.labels[order[k]] == 1:
                tp += 1
            else:
                fp += 1
        points.append((fp / n_neg, tp / n_pos))
        i = j + 1
    return points


def _pr_points(s: M.ScoredSet) -> list[tuple[float, float]]:
    n_pos = sum(s.labels)
    if n_pos == 0:
        return []
    order = sorted(range(s.n), key=lambda i: -s.probs[i])
    points = []
    tp = 0
    i = 0
    while i < s.n:
        j = i
        while j + 1 < s.n and s.probs[order[j + 1]] == s.probs[order[i]]:
            j += 1
        for k in range(i, j + 1):
            tp += s.labels[order[k]]
        points.append((tp / n_pos, tp / (j + 1)))
        i = j + 1
    return points


def _data_hash(cfg: PipelineConfig) -> str:
    work = cfg.work_dir
    parts = []
    for name in ("attempts.csv", "requests.jsonl", "contexts.json"):
        path = work / name
        parts.append(sha256_text(path.read_text(encoding="utf-8")) if path.exists() else "missing")
    code_dir = work / "code"
    if code_dir.is_dir():
        for path in sorted(code_dir.iterdir()):
            parts.append(sha256_text(path.name + "\n" + path.read_text(encoding="utf-8")))
    return sha256_text("\n".join(parts))


def build_report(cfg: PipelineConfig) -> EvaluationReport:
    work = cfg.work_dir
    attempts = load_attempts(cfg)
    assignment = load_assignment(cfg)
    verification = load_verification(cfg)
    wide = load_wide(cfg)
    ece_key = f"ece{cfg.ece_bins}"

    judges_block: dict = {}
    curves: dict = {"roc": {}, "pr": {}, "reliability": {}}
    test_rows = wide.rows_for_split("test")
    for spec in cfg.judges:
        name = spec.name
        ver = verification.get(name, {"accepted": False, "violations": []})
        if not ver["accepted"]:
            judges_block[name] = {
                "absent": True,
                "reason": "verification failed",
                "violations": ver["violations"],
            }
            continue
        block = read_json(work / "metrics" / f"judge_metrics_{name}.json")
        judges_block[name] = block
        test = _scored_set(test_rows, name) if test_rows else None
        if test is not None:
            curves["roc"][name] = [[x, y] for x, y in _roc_points(test)]
            curves["pr"][name] = [[x, y] for x, y in _pr_points(test)]
            curves["reliability"][name] = [
                [b.index, b.count, b.mean_confidence, b.empirical_accuracy]
                for b in M.calibration_bins(test, cfg.ece_bins)
            ]

    agreement = read_json(work / "metrics" / "agreement.json")

    traj_dir = work / "trajectory"
    meta = read_json(traj_dir / "meta.json")
    success = [[int(r["k"]), float(r["success"])] for r in read_csv_rows(traj_dir / "success_at_turn.csv")]
    survival = [
        [int(r["t"]), int(r["at_risk"]), int(r["events"]), float(r["survival"])]
        for r in read_csv_rows(traj_dir / "survival.csv")
    ]
    struggle = [
        [r["participant"], r["problem"], int(r["turn"]), float(r["p_bar"]),
         float(r["delta_p_bar"]) if r["delta_p_bar"] else None]
        for r in read_csv_rows(traj_dir / "trajectory_points.csv")
    ]
    churn_rows = read_csv_rows(traj_dir / "churn.csv")
    churn_points = [
        [r["participant"], r["problem"], int(r["turn"]),
         float(r["ned_code"]), float(r["cb_churn"]),
         float(r["delta_p_bar"]) if r["delta_p_bar"] else None,
         int(r["degraded_flag"])]
        for r in churn_rows
    ]
    convergence_values = [float(r["conv_cb"]) for r in read_csv_rows(traj_dir / "convergence.csv")]
    conv_hist = [0] * 20
    for v in convergence_values:
        conv_hist[min(19, int(v * 20))] += 1
    prompt_map = [
        [r["participant"], float(r["z1"]), float(r["z2"]), float(r["solved_rate"])]
        for r in read_csv_rows(traj_dir / "prompt_map.csv")
    ]

    def _summary(values: list[float]) -> dict | None:
        if not values:
            return None
        mean = math.fsum(values) / len(values)
        var = math.fsum((v - mean) ** 2 for v in values) / len(values)
        return {"mean": mean, "std": math.sqrt(var), "n": len(values)}

    trajectory_block = {
        "success_at_turn": success,
        "survival": survival,
        "struggle_points": struggle,
        "churn_points": churn_points,
        "churn_summary": {
            "ned_code": _summary([float(r["ned_code"]) for r in churn_rows]),
            "cb_churn": _summary([float(r["cb_churn"]) for r in churn_rows]),
        },
        "convergence_histogram": conv_hist,
        "convergence_n": len(convergence_values),
        "ned_summary": read_json(traj_dir / "ned_summary.json"),
        "solved_rate": {u: r for u, r in sorted(solved_rate(attempts).items())},
        "prompt_map": prompt_map,
        "meta": meta,
    }

    split_counts = {"train": 0, "val": 0, "test": 0}
    for s in assignment.values():
        split_counts[s] += 1
    timestamps = sorted(a.timestamp for a in attempts)
    ingest_report = read_json(work / "ingest_report.json")
    provenance = {
        "tool_version": __version__,
        "config_hash": cfg.config_hash(),
        "data_hash": _data_hash(cfg),
        "seed": cfg.seed,
        "n_attempts": len(attempts),
        "n_trajectories": len(assignment),
        "split_counts": split_counts,
        "data_time_range": [timestamps[0], timestamps[-1]] if timestamps else None,
        "ece_bins": cfg.ece_bins,
        "budgets": {"max_code_chars": cfg.max_code_chars, "max_prompt_chars": cfg.max_prompt_chars},
        "codebleu": {
            "weights": list(cfg.codebleu.weights),
            "max_ngram": cfg.codebleu.max_ngram,
            "keyword_weight": cfg.codebleu.keyword_weight,
            "grammar": cfg.codebleu.grammar,
        },
        "verification": {name: v["accepted"] for name, v in sorted(verification.items())},
        "ingest_warnings": len(ingest_report.get("warnings", [])),
        "degraded": {
            "codebleu_degraded_pairs": meta.get("codebleu_degraded_pairs", 0),
            "prompt_map_fallback": meta.get("prompt_map_fallback", False),
        },
    }

    return EvaluationReport(
        judges=judges_block,
        agreement=agreement,
        trajectory=trajectory_block,
        curves=curves,
        provenance=provenance,
    )


def emit_plot_data(report: EvaluationReport, plots_dir: str | Path) -> list[Path]:
    """Write plot-ready CSVs derived from the report alone."""
    plots = Path(plots_dir)
    written: list[Path] = []

    def _csv(name: str, header, rows) -> None:
        path = plots / name
        atomic_write_csv(path, header, rows)
        written.append(path)

    for judge, points in sorted(report.curves.get("roc", {}).items()):
        _csv(f"roc_{judge}.csv", ("fpr", "tpr"), [(float_repr(x), float_repr(y)) for x, y in points])
    for judge, points in sorted(report.curves.get("pr", {}).items()):
        _csv(f"pr_{judge}.csv", ("recall", "precision"), [(float_repr(x), float_repr(y)) for x, y in points])
    for judge, bins in sorted(report.curves.get("reliability", {}).items()):
        _csv(
            f"reliability_{judge}.csv",
            ("bin", "count", "mean_confidence", "empirical_accuracy"),
            [(b[0], b[1], float_repr(b[2]), float_repr(b[3])) for b in bins],
        )

    agreement = report.agreement
    if agreement and not agreement.get("absent"):
        judges = list(agreement["judges"])
        kappa = {(p["a"], p["b"]): p["kappa"] for p in agreement["pairwise"]}
        rows = []
        for a in judges:
            row = [a]
            for b in judges:
                if a == b:
                    row.append(float_repr(1.0))
                else:
                    row.append(float_repr(kappa.get((a, b), kappa.get((b, a)))))
            rows.append(row)
        _csv("kappa_matrix.csv", ["judge"] + judges, rows)

    t = report.trajectory
    _csv("success_at_turn.csv", ("k", "success"), [(k, float_repr(v)) for k, v in t["success_at_turn"]])
    _csv(
        "survival.csv",
        ("t", "at_risk", "events", "survival"),
        [(a, b, c, float_repr(d)) for a, b, c, d in t["survival"]],
    )
    _csv(
        "struggle_curves.csv",
        ("participant", "problem", "turn", "p_bar"),
        [(u, p, k, float_repr(v)) for u, p, k, v, _ in t["struggle_points"]],
    )
    _csv(
        "churn_vs_progress.csv",
        ("participant", "problem", "turn", "ned_code", "cb_churn", "delta_p_bar", "degraded_flag"),
        [
            (u, p, k, float_repr(nc), float_repr(cb), float_repr(dp), flag)
            for u, p, k, nc, cb, dp, flag in t["churn_points"]
        ],
    )
    _csv(
        "convergence_hist.csv",
        ("bin_lo", "bin_hi", "count"),
        [
            (float_repr(i / 20), float_repr((i + 1) / 20), c)
            for i, c in enumerate(t["convergence_histogram"])
        ],
    )
    _csv(
        "prompt_map.csv",
        ("participant", "z1", "z2", "solved_rate"),
        [(u, float_repr(x), float_repr(y), float_repr(r)) for u, x, y, r in t["prompt_map"]],
    )
    return written


def stage_report(cfg: PipelineConfig) -> EvaluationReport:
    report = build_report(cfg)
    atomic_write_json(cfg.work_dir / "report.json", report.to_dict())
    emit_plot_data(report, cfg.work_dir / "plots")
    return report


# ---------------------------------------------------------------- pipeline


_STAGE_FUNCS = {
    "ingest": stage_ingest,
    "split": stage_split,
    "serialize": stage_serialize,
    "judge": stage_judge,
    "verify": stage_verify,
    "merge": stage_merge,
    "eval": stage_eval,
    "trajectory": stage_trajectory,
    "report": stage_report,
}


def run_stage(cfg: PipelineConfig, stage: str):
    func = _STAGE_FUNCS.get(stage)
    if func is None:
        raise StageFailure(stage, f"unknown stage (expected one of {', '.join(STAGES)})")
    try:
        return func(cfg)
    except StageFailure:
        raise
    except Exception as exc:
        raise StageFailure(stage, f"{type(exc).__name__}: {exc}") from exc


def run_pipeline(cfg: PipelineConfig) -> EvaluationReport:
    """Execute every stage in order; returns the final report.

    Prior artifacts are left intact when a stage fails, so rerunning after a
    fix resumes from disk (the judge stage additionally resumes from its
    checkpoints).
    """
    report = None
    for stage in STAGES:
        result = run_stage(cfg, stage)
        if stage == "report":
            report = result
    return report
