"""
StrideSense 评估模块
"""

from evaluation.metrics import ccc, ccc_or_none, mae
from evaluation.report import (
    UNDEFINED,
    EvalReport,
    PredictionPair,
    RunnerResult,
    StratumResult,
    build_report,
    emit_comparison,
    emit_report,
    evaluate,
    per_runner,
    read_pairs,
    stratify,
    train_mean_baseline,
)

__all__ = [
    "ccc",
    "ccc_or_none",
    "mae",
    "UNDEFINED",
    "EvalReport",
    "PredictionPair",
    "RunnerResult",
    "StratumResult",
    "build_report",
    "emit_comparison",
    "emit_report",
    "evaluate",
    "per_runner",
    "read_pairs",
    "stratify",
    "train_mean_baseline",
]
