from .generate import (
    LabeledStream,
    SyntheticConfig,
    generate,
    generate_pattern,
    labels_path,
    write_stream,
)
from .harness import EvalRun, SweepRow, evaluate, score_stream, setup_time, sweep_M
from .metrics import aggregate_events, auc, auc_summary

__all__ = [
    "EvalRun",
    "LabeledStream",
    "SweepRow",
    "SyntheticConfig",
    "aggregate_events",
    "auc",
    "auc_summary",
    "evaluate",
    "generate",
    "generate_pattern",
    "labels_path",
    "score_stream",
    "setup_time",
    "sweep_M",
    "write_stream",
]
