"""
StrideSense 模型模块
"""

from model.cnn14 import (
    MIN_FRAMES,
    Cnn14Regressor,
    build_cnn14,
    compute_input_stats,
    count_parameters,
    forward,
)
from model.checkpoint import (
    Checkpoint,
    checkpoint_from_model,
    load_checkpoint,
    model_from_checkpoint,
    read_checkpoint,
    replace_head,
    save_checkpoint,
    write_checkpoint,
)
from model.inference import load_features, predict_segments, stack_batch

__all__ = [
    "MIN_FRAMES",
    "Cnn14Regressor",
    "build_cnn14",
    "compute_input_stats",
    "count_parameters",
    "forward",
    "Checkpoint",
    "checkpoint_from_model",
    "load_checkpoint",
    "model_from_checkpoint",
    "read_checkpoint",
    "replace_head",
    "save_checkpoint",
    "write_checkpoint",
    "load_features",
    "predict_segments",
    "stack_batch",
]
