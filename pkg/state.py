"""
StrideSense 流水线状态

定义 LangGraph 流水线在各阶段节点之间传递的状态。
阶段之间只通过文件交换数据，状态里只保存路径与运行信息。
"""

from pathlib import Path
from typing import Literal, Optional, TypedDict


STAGES = ("synth", "segment", "featurize", "split", "train", "evaluate")


class PipelineState(TypedDict):
    """
    StrideSense 流水线状态
    """
    # 目录与产物路径
    work_dir: str                    # 流水线工作目录
    corpus_dir: str                  # 语料目录（WAV + 清单）
    segments_path: str               # 片段表
    features_dir: str                # 特征缓存目录
    featurized_path: str             # 带特征路径的片段表
    partition_path: str              # 分区表
    train_dir: str                   # 训练输出目录
    checkpoint_path: str             # 最佳检查点
    history_path: str                # 训练历史表
    report_dir: str                  # 评估报告目录

    # 训练初始化方式
    init: Literal["random", "checkpoint"]
    init_checkpoint: Optional[str]

    # 评估分区与并排对比的检查点（标签 → 路径）
    eval_partition: Literal["train", "dev", "test"]
    compare_checkpoints: dict[str, str]

    # 状态信息
    stage: str                       # 当前（或最后执行的）阶段
    status: str                      # initialized / running / completed / error
    error: Optional[str]             # 错误信息
    error_kind: Optional[str]        # 错误类别名
    exit_code: int                   # 进程退出码
    timings: dict                    # 各阶段耗时（秒）


def create_initial_state(
    work_dir: str,
    corpus_dir: Optional[str] = None,
    init: Literal["random", "checkpoint"] = "random",
    init_checkpoint: Optional[str] = None,
    eval_partition: Literal["train", "dev", "test"] = "test",
    compare_checkpoints: Optional[dict[str, str]] = None,
) -> PipelineState:
    """
    创建初始状态（产物路径按工作目录的固定布局生成）

    Args:
        work_dir: 工作目录
        corpus_dir: 语料目录（默认 <work_dir>/corpus）
        init: 训练初始化方式
        init_checkpoint: 预训练检查点路径（init 为 checkpoint 时必需）
        eval_partition: 评估使用的分区
        compare_checkpoints: 与主检查点并排评估的其他检查点

    Returns:
        初始化的状态对象
    """
    root = Path(work_dir)
    return PipelineState(
        work_dir=str(root),
        corpus_dir=str(corpus_dir or root / "corpus"),
        segments_path=str(root / "segments" / "segments.csv"),
        features_dir=str(root / "features"),
        featurized_path=str(root / "features" / "segments.csv"),
        partition_path=str(root / "split" / "partition.csv"),
        train_dir=str(root / "train"),
        checkpoint_path=str(root / "train" / "best.ckpt"),
        history_path=str(root / "train" / "history.csv"),
        report_dir=str(root / "report"),
        init=init,
        init_checkpoint=init_checkpoint,
        eval_partition=eval_partition,
        compare_checkpoints=dict(compare_checkpoints or {}),
        stage="",
        status="initialized",
        error=None,
        error_kind=None,
        exit_code=0,
        timings={},
    )
