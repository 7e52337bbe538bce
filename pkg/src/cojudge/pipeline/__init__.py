"""End-to-end pipeline: config, stages, synthetic fixtures, reporting."""

from cojudge.pipeline.config import PipelineConfig, default_offline_config
from cojudge.pipeline.stages import (
    STAGES,
    EvaluationReport,
    StageFailure,
    build_report,
    emit_plot_data,
    run_pipeline,
    run_stage,
)
from cojudge.pipeline.synth import SynthManifest, generate_synthetic_corpus

__all__ = [
    "PipelineConfig",
    "default_offline_config",
    "STAGES",
    "EvaluationReport",
    "StageFailure",
    "build_report",
    "emit_plot_data",
    "run_pipeline",
    "run_stage",
    "SynthManifest",
    "generate_synthetic_corpus",
]
