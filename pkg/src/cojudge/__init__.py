"""Reliability-aware multi-judge evaluation for iterative human-AI coding traces."""

__version__ = "0.1.0"

from cojudge.metrics import (  # noqa: F401
    ScoredSet,
    brier,
    cohen_kappa,
    ece,
    fleiss_kappa,
    log_loss,
    mcc,
    pr_auc,
    roc_auc,
    select_threshold,
)
from cojudge.pipeline import (  # noqa: F401
    PipelineConfig,
    default_offline_config,
    generate_synthetic_corpus,
    run_pipeline,
)
from cojudge.similarity import levenshtein, ned  # noqa: F401
