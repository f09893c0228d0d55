"""
测试公共夹具
"""

from pathlib import Path

import numpy as np
import pytest

from config_loader import ModelConfig
from dataset.types import RunnerProfile, Segment
from features.cache import write_feature_cache


def make_segment(segment_id: str, session_id: str = "S1", runner_id: str = "R001",
                 fatigue: int = 12, start_s: float = 0.0, feature_path=None) -> Segment:
    return Segment(
        segment_id=segment_id,
        session_id=session_id,
        runner_id=runner_id,
        start_s=start_s,
        end_s=start_s + 30.0,
        fatigue=fatigue,
        wellbeing=0,
        feature_path=feature_path,
    )


def write_feature_segments(
    directory: Path,
    targets: list[int],
    n_frames: int = 64,
    n_mels: int = 64,
    seed: int = 0,
    runners: int = 2,
) -> list[Segment]:
    """
    写出带特征缓存的片段：中间几个 Mel 频带的能量随 RPE 线性上升
    """
    rng = np.random.default_rng(seed)
    segments = []
    for index, fatigue in enumerate(targets):
        values = rng.normal(-8.0, 1.0, size=(n_frames, n_mels))
        values[:, 20:28] += 0.5 * (fatigue - 6)
        path = directory / f"seg{index:03d}.lm"
        write_feature_cache(path, values)
        segments.append(make_segment(
            f"seg{index:03d}",
            session_id=f"S{index % 4}",
            runner_id=f"R{index % runners + 1:03d}",
            fatigue=fatigue,
            feature_path=str(path),
        ))
    return segments


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_model_config() -> ModelConfig:
    """通道 2..64 的最小结构，用于快速前向与训练"""
    return ModelConfig(width_scale=1 / 32)


@pytest.fixture
def small_model_config() -> ModelConfig:
    return ModelConfig(width_scale=0.125)


@pytest.fixture
def profiles() -> list[RunnerProfile]:
    return [
        RunnerProfile(runner_id="R001", age_range="21-30", sex="M"),
        RunnerProfile(runner_id="R002", age_range="21-30", sex="F"),
        RunnerProfile(runner_id="R003", age_range="51-60", sex="F"),
    ]
