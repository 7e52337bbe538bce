"""Command-line entry point.

One subcommand per pipeline stage plus `run` (the whole pipeline), and
`synth` for generating an offline fixture corpus. Exit codes: 0 on success,
2 when judge verification was rejected, 3 on a stage failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from cojudge.pipeline.config import PipelineConfig
from cojudge.pipeline.stages import STAGES, StageFailure, run_pipeline, run_stage
from cojudge.pipeline.synth import generate_synthetic_corpus

EXIT_OK = 0
EXIT_VERIFICATION_REJECTED = 2
EXIT_STAGE_FAILURE = 3

log = logging.getLogger("cojudge")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="path to the pipeline config JSON")
    parser.add_argument("--seed", type=int, default=None, help="override the configured seed")
    parser.add_argument("--judges", default=None, help="comma-separated judge names to keep")
    parser.add_argument(
        "--offline", action="store_true",
        help="replace every judge with a deterministic mock (no network, no pacing)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cojudge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate a synthetic input corpus")
    synth.add_argument("--out", required=True, help="output corpus directory")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--participants", type=int, default=15)
    synth.add_argument("--problems", type=int, default=13)
    synth.add_argument("--attempts", type=int, default=517)

    run = sub.add_parser("run", help="run the full pipeline (or one stage via --stage)")
    _add_common(run)
    run.add_argument("--stage", choices=STAGES, default=None)

    for stage in STAGES:
        stage_parser = sub.add_parser(stage, help=f"run only the {stage} stage")
        _add_common(stage_parser)

    return parser


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig.from_file(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if args.judges:
        keep = {name.strip() for name in args.judges.split(",") if name.strip()}
        kept = tuple(j for j in cfg.judges if j.name in keep)
        missing = keep - {j.name for j in kept}
        if missing:
            raise SystemExit(f"unknown judge name(s): {', '.join(sorted(missing))}")
        cfg = dataclasses.replace(cfg, judges=kept)
    if args.offline:
        cfg = cfg.with_offline_judges()
    return cfg


def _verification_ok(cfg: PipelineConfig) -> bool:
    from cojudge.pipeline.stages import load_verification

    try:
        results = load_verification(cfg)
    except FileNotFoundError:
        return True
    return all(r["accepted"] for r in results.values())


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)

    if args.command == "synth":
        manifest = generate_synthetic_corpus(
            args.out,
            seed=args.seed,
            participants=args.participants,
            problems=args.problems,
            attempts=args.attempts,
        )
        log.info("synthetic corpus written to %s: %s", args.out, manifest.to_dict())
        return EXIT_OK

    cfg = _load_config(args)
    try:
        if args.command == "run" and args.stage is None:
            run_pipeline(cfg)
            if not _verification_ok(cfg):
                log.warning("report emitted with unverified judge(s)")
                return EXIT_VERIFICATION_REJECTED
            return EXIT_OK
        stage = args.stage if args.command == "run" else args.command
        result = run_stage(cfg, stage)
        if stage == "verify":
            rejected = sorted(name for name, r in result.items() if not r.accepted)
            if rejected:
                log.warning("verification rejected for: %s", ", ".join(rejected))
                return EXIT_VERIFICATION_REJECTED
        return EXIT_OK
    except StageFailure as exc:
        log.error("%s", exc)
        return EXIT_STAGE_FAILURE


if __name__ == "__main__":
    sys.exit(main())
