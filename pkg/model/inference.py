"""
按片段批量推理
"""

import logging
from pathlib import Path

import numpy as np

from dataset.types import Segment
from errors import MissingFeatures
from features.cache import read_feature_cache
from model.cnn14 import Cnn14Regressor, forward
from utils.parallel import map_ordered


logger = logging.getLogger(__name__)


def load_features(segment: Segment) -> np.ndarray:
    """读取片段的特征缓存 (T, n_mels)"""
    if segment.feature_path is None or not Path(segment.feature_path).exists():
        raise MissingFeatures(f"片段 {segment.segment_id} 缺少特征文件: {segment.feature_path}")
    return read_feature_cache(segment.feature_path)


def stack_batch(segments: list[Segment]) -> np.ndarray:
    """
    把若干片段的特征堆叠为 (N, 1, T, n_mels)

    帧数不一致时截断到最短的一个。
    """
    arrays = [load_features(s) for s in segments]
    frames = min(a.shape[0] for a in arrays)
    return np.stack([a[:frames] for a in arrays])[:, None, :, :]


def fixed_chunks(items: list, size: int) -> list[list]:
    return [items[i:i + size] for i in range(0, len(items), size)]


def predict_segments(
    model: Cnn14Regressor,
    segments: list[Segment],
    batch_size: int = 24,
    workers: int = 1,
) -> np.ndarray:
    """
    推理模式下预测每个片段的 RPE

    批次按输入顺序以固定大小切分，每批的结果与线程数无关。

    Args:
        model: 模型
        segments: 片段列表
        batch_size: 批大小
        workers: 线程数

    Returns:
        与 segments 顺序一致的 float64 预测值
    """
    if not segments:
        return np.zeros(0, dtype=np.float64)
    model.eval()

    def run(chunk: list[Segment]) -> np.ndarray:
        return forward(model, stack_batch(chunk), "eval").data.astype(np.float64)

    results = map_ordered(run, fixed_chunks(segments, batch_size), workers)
    logger.debug(f"推理完成: {len(segments)} 个片段")
    return np.concatenate(results)
