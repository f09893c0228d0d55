"""
StrideSense 训练模块
"""

from training.losses import ccc, ccc_loss
from training.loader import Batch, BatchLoader, plan_batches
from training.trainer import (
    EpochRecord,
    TrainHistory,
    TrainResult,
    read_history,
    select_best_epoch,
    train,
    write_history,
)

__all__ = [
    "ccc",
    "ccc_loss",
    "Batch",
    "BatchLoader",
    "plan_batches",
    "EpochRecord",
    "TrainHistory",
    "TrainResult",
    "read_history",
    "select_best_epoch",
    "train",
    "write_history",
]
