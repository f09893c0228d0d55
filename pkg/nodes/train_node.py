"""
训练节点

按 init 选择随机初始化（CNN14-random）或加载预训练检查点并替换输出层，
在 train 分区上训练、按 dev 分区选模，写出最佳检查点与训练历史。
"""

import logging
from pathlib import Path

from config_loader import Config
from dataset.segments import read_segments
from dataset.split import read_partition
from errors import UsageError
from model.checkpoint import read_checkpoint, replace_head, write_checkpoint
from model.cnn14 import Cnn14Regressor, build_cnn14
from nodes.base import stage_node
from state import PipelineState
from training.trainer import train, write_history
from utils.run_manifest import start_run_manifest


logger = logging.getLogger(__name__)


def initial_model(state: PipelineState, config: Config) -> Cnn14Regressor:
    """按初始化方式构建待训练模型"""
    if state["init"] == "checkpoint":
        if not state.get("init_checkpoint"):
            raise UsageError("--init checkpoint 需要同时给出 --init-checkpoint")
        logger.info(f"加载预训练检查点: {state['init_checkpoint']}")
        return replace_head(read_checkpoint(state["init_checkpoint"]), seed=config.training.init_seed)
    return build_cnn14(config.model, seed=config.training.init_seed)


@stage_node("train")
def train_node(state: PipelineState, config: Config) -> None:
    """训练并保存最佳检查点"""
    train_dir = Path(state["train_dir"])
    run = start_run_manifest(
        "train",
        train_dir,
        config.snapshot(),
        seeds={"shuffle": config.training.shuffle_seed, "init": config.training.init_seed},
        inputs={
            "segments": state["featurized_path"],
            "partition": state["partition_path"],
            "init_checkpoint": state.get("init_checkpoint") or "",
        },
        outputs={"checkpoint": state["checkpoint_path"], "history": state["history_path"]},
    )

    segments = read_segments(state["featurized_path"], config.dataset.segment_seconds)
    split = read_partition(state["partition_path"])
    model = initial_model(state, config)
    result = train(
        model,
        split.segments_in("train", segments),
        split.segments_in("dev", segments),
        config.training,
        workers=config.runtime.threads,
        eval_batch_size=config.evaluation.batch_size,
    )
    result.checkpoint.metadata["init"] = "pretrained" if state["init"] == "checkpoint" else "random"
    write_checkpoint(result.checkpoint, state["checkpoint_path"])
    write_history(state["history_path"], result.history)

    best = result.history.best
    run.finish(best_epoch=best.epoch, dev_mae=best.dev_mae, dev_ccc=best.dev_ccc)
