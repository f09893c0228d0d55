"""
评估节点
"""

import logging
from pathlib import Path

from config_loader import Config
from dataset.manifest import load_manifest
from dataset.segments import read_segments
from dataset.split import read_partition
from errors import UsageError
from evaluation.report import UNDEFINED, emit_comparison, emit_report, evaluate, train_mean_baseline
from model.checkpoint import Checkpoint, model_from_checkpoint, read_checkpoint
from nodes.base import stage_node
from state import PipelineState
from utils.run_manifest import start_run_manifest


logger = logging.getLogger(__name__)

INIT_LABELS = {"random": "cnn14-random", "pretrained": "cnn14-pretrained"}


def checkpoint_label(checkpoint: Checkpoint) -> str:
    """按训练时的初始化方式命名主检查点"""
    return INIT_LABELS.get(checkpoint.metadata.get("init"), "model")


@stage_node("evaluate")
def evaluate_node(state: PipelineState, config: Config) -> None:
    """在指定分区上评估最佳检查点并写出报告；给出对比检查点时另写并排对比表"""
    report_dir = Path(state["report_dir"])
    partition = state["eval_partition"]
    compare = state.get("compare_checkpoints") or {}
    run = start_run_manifest(
        "evaluate",
        report_dir,
        config.snapshot(),
        inputs={
            "checkpoint": state["checkpoint_path"],
            "segments": state["featurized_path"],
            "partition": state["partition_path"],
            "corpus": state["corpus_dir"],
            **{f"compare:{label}": path for label, path in compare.items()},
        },
    )

    checkpoint = read_checkpoint(state["checkpoint_path"])
    segments = read_segments(state["featurized_path"], config.dataset.segment_seconds)
    split = read_partition(state["partition_path"])
    _, profiles = load_manifest(state["corpus_dir"])
    eval_segments = split.segments_in(partition, segments)
    baseline = train_mean_baseline(split.segments_in("train", segments))

    def run_evaluation(model_checkpoint: Checkpoint):
        return evaluate(
            model_from_checkpoint(model_checkpoint),
            eval_segments,
            profiles,
            batch_size=config.evaluation.batch_size,
            workers=config.runtime.threads,
            baseline_prediction=baseline,
        )

    report = run_evaluation(checkpoint)
    emit_report(report, report_dir, config.evaluation.clip_predictions)
    stats = {
        "partition": partition,
        "count": report.count,
        "global_mae": report.global_mae,
        "global_ccc": UNDEFINED if report.global_ccc is None else report.global_ccc,
        "baseline_mae": report.baseline_mae,
    }

    if compare:
        label = checkpoint_label(checkpoint)
        reports = {label: report}
        for other_label, path in compare.items():
            if other_label in reports:
                raise UsageError(f"对比标签 {other_label} 与主检查点重名")
            logger.info(f"评估对比检查点 {other_label}: {path}")
            reports[other_label] = run_evaluation(read_checkpoint(path))
        emit_comparison(reports, report_dir)
        stats["compared"] = list(reports)
    run.finish(**stats)
