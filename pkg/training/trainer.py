"""
训练循环

每轮：按种子洗牌训练片段 → 按批前向、计算 CCC 损失、SGD 更新 →
推理模式下计算开发集 MAE 与 CCC。
返回选模指标最优（默认开发集 CCC 最高，并列取最早）一轮的检查点。
"""

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from config_loader import TrainingConfig
from dataset.tables import read_table, write_table
from dataset.types import Segment
from errors import EmptyPartition, ParseError
from evaluation.metrics import ccc, mae
from model.checkpoint import Checkpoint, checkpoint_from_model
from model.cnn14 import Cnn14Regressor, compute_input_stats, forward
from model.inference import load_features, predict_segments
from nn.optim import SGD
from training.loader import BatchLoader, plan_batches
from training.losses import ccc_loss


logger = logging.getLogger(__name__)

HISTORY_COLUMNS = ["epoch", "train_loss", "dev_mae", "dev_ccc"]
LOWER_IS_BETTER = {"dev_mae"}


@dataclass
class EpochRecord:
    """一轮训练的记录"""
    epoch: int
    train_loss: float
    dev_mae: float
    dev_ccc: float


@dataclass
class TrainHistory:
    """训练历史"""
    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: Optional[int] = None

    @property
    def best(self) -> Optional[EpochRecord]:
        if self.best_epoch is None:
            return None
        return self.epochs[self.best_epoch - 1]

    def dev_cccs(self) -> list[float]:
        return [r.dev_ccc for r in self.epochs]

    def metric_values(self, metric: str) -> list[float]:
        return [getattr(r, metric) for r in self.epochs]

    def select(self, metric: str = "dev_ccc") -> int:
        """按选模指标确定最佳轮次"""
        self.best_epoch = select_best_epoch(self.metric_values(metric),
                                            higher_is_better=metric not in LOWER_IS_BETTER)
        return self.best_epoch


@dataclass
class TrainResult:
    """训练结果：历史、最佳检查点与载入最佳权重的模型"""
    history: TrainHistory
    checkpoint: Checkpoint
    model: Cnn14Regressor


def _selection_key(value: float, higher_is_better: bool = True) -> float:
    if not math.isfinite(value):
        return -math.inf
    return value if higher_is_better else -value


def select_best_epoch(dev_cccs: list[float], higher_is_better: bool = True) -> int:
    """
    指标最优的轮次（从 1 开始计数，并列取最早，NaN 视为最差）

    Args:
        dev_cccs: 每轮的开发集指标（默认为 CCC）
        higher_is_better: 为 False 时取最小值（如 MAE）

    Returns:
        最佳轮次
    """
    if not dev_cccs:
        raise EmptyPartition("没有任何训练轮次")
    best = 0
    for index, value in enumerate(dev_cccs):
        if _selection_key(value, higher_is_better) > _selection_key(dev_cccs[best], higher_is_better):
            best = index
    return best + 1


def write_history(path: str | Path, history: TrainHistory) -> None:
    """写出训练历史表（浮点数保留完整精度）"""
    rows = [
        {"epoch": r.epoch, "train_loss": repr(r.train_loss),
         "dev_mae": repr(r.dev_mae), "dev_ccc": repr(r.dev_ccc)}
        for r in history.epochs
    ]
    write_table(path, rows, HISTORY_COLUMNS)


def read_history(path: str | Path, metric: str = "dev_ccc") -> TrainHistory:
    frame = read_table(path, HISTORY_COLUMNS)
    history = TrainHistory()
    for index, row in frame.iterrows():
        try:
            history.epochs.append(EpochRecord(
                epoch=int(row["epoch"]),
                train_loss=float(row["train_loss"]),
                dev_mae=float(row["dev_mae"]),
                dev_ccc=float(row["dev_ccc"]),
            ))
        except ValueError as e:
            raise ParseError(f"训练历史无法解析: {e}", path=str(path), line=int(index) + 2) from e
    if history.epochs:
        history.select(metric)
    return history


def train(
    model: Cnn14Regressor,
    train_segments: list[Segment],
    dev_segments: list[Segment],
    cfg: TrainingConfig,
    workers: int = 1,
    eval_batch_size: int = 24,
    on_epoch: Optional[Callable[[EpochRecord], None]] = None,
) -> TrainResult:
    """
    训练模型并按选模指标（cfg.selection_metric）选出最佳轮次

    Args:
        model: 待训练模型（随机初始化或替换输出层后的预训练模型）
        train_segments: 训练片段（需已有特征缓存）
        dev_segments: 开发片段
        cfg: 训练配置
        workers: 开发集推理线程数
        eval_batch_size: 开发集推理批大小
        on_epoch: 每轮结束后的回调（用于进度显示）

    Returns:
        TrainResult
    """
    if len(train_segments) < 2:
        raise EmptyPartition(f"训练分区只有 {len(train_segments)} 个片段")
    if len(dev_segments) < 2:
        raise EmptyPartition(f"开发分区只有 {len(dev_segments)} 个片段")

    # 标准化统计量只来自训练分区
    mean, std = compute_input_stats(
        (load_features(s) for s in train_segments), model.config.n_mels
    )
    model.set_input_stats(mean, std)

    shuffle_seq, dropout_seq = np.random.SeedSequence(cfg.shuffle_seed).spawn(2)
    shuffle_rng = np.random.default_rng(shuffle_seq)
    model.reseed_dropout(int(dropout_seq.generate_state(1)[0]))
    optimizer = SGD(model.named_parameters(), cfg.learning_rate, cfg.momentum, cfg.weight_decay)
    dev_targets = np.array([s.fatigue for s in dev_segments], dtype=np.float64)

    history = TrainHistory()
    best_state: Optional[dict[str, np.ndarray]] = None
    logger.info(
        f"开始训练: {len(train_segments)} 个训练片段, {len(dev_segments)} 个开发片段, "
        f"{cfg.epochs} 轮, 批大小 {cfg.batch_size}"
    )

    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        order = shuffle_rng.permutation(len(train_segments)).tolist()
        batches = plan_batches(order, cfg.batch_size)
        losses = []
        for batch in BatchLoader(train_segments, batches, cfg.prefetch):
            pred = forward(model, batch.features, "train")
            loss = ccc_loss(pred, batch.targets)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            losses.append(loss.item())

        dev_preds = predict_segments(model, dev_segments, eval_batch_size, workers)
        record = EpochRecord(
            epoch=epoch,
            train_loss=float(np.mean(losses)) if losses else math.nan,
            dev_mae=mae(dev_preds, dev_targets),
            dev_ccc=ccc(dev_preds, dev_targets),
        )
        history.epochs.append(record)

        if history.select(cfg.selection_metric) == epoch:
            best_state = model.state_dict()
        logger.info(
            f"第 {epoch}/{cfg.epochs} 轮: loss={record.train_loss:.4f} "
            f"dev_mae={record.dev_mae:.3f} dev_ccc={record.dev_ccc:.3f} "
            f"({time.perf_counter() - t0:.1f}s)"
        )
        if on_epoch:
            on_epoch(record)

    history.select(cfg.selection_metric)
    model.load_state_dict(best_state)
    best = history.best
    checkpoint = checkpoint_from_model(model, metadata={
        "best_epoch": best.epoch,
        "dev_mae": best.dev_mae,
        "dev_ccc": best.dev_ccc,
        "shuffle_seed": cfg.shuffle_seed,
        "init_seed": cfg.init_seed,
        "selection_metric": cfg.selection_metric,
    })
    logger.info(f"最佳轮次: {best.epoch} (dev_ccc={best.dev_ccc:.4f}, dev_mae={best.dev_mae:.3f})")
    return TrainResult(history=history, checkpoint=checkpoint, model=model)
