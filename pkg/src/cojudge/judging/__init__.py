"""Schema-constrained multi-judge inference with checkpointing and repair."""

from cojudge.judging.adapters import (
    JudgeAdapterSpec,
    MockJudgeAdapter,
    adapter_infer,
    build_adapter,
    mock_judge,
)
from cojudge.judging.checkpoint import CheckpointCorrupt, CheckpointStore
from cojudge.judging.orchestrator import (
    Backoff,
    PredictionTable,
    RetryResult,
    UnverifiedInput,
    VerificationResult,
    merge_predictions,
    retry_failed,
    run_inference,
    verify_outputs,
)
from cojudge.judging.schema import JudgeOutput, parse_judge_response

__all__ = [
    "JudgeAdapterSpec",
    "MockJudgeAdapter",
    "adapter_infer",
    "build_adapter",
    "mock_judge",
    "CheckpointCorrupt",
    "CheckpointStore",
    "Backoff",
    "PredictionTable",
    "RetryResult",
    "UnverifiedInput",
    "VerificationResult",
    "merge_predictions",
    "retry_failed",
    "run_inference",
    "verify_outputs",
    "JudgeOutput",
    "parse_judge_response",
]
