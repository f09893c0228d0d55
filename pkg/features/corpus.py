"""
语料级特征提取

每个会话的 WAV 只解码一次，再按片段切出音频并计算 log-Mel，写入特征缓存。
会话之间互不共享可变状态，可在线程池上并行。
"""

import logging
from collections import defaultdict
from pathlib import Path
from typing import Optional

from audio.wav import AudioClip, read_wav, require_rate
from config_loader import MelConfig, StftConfig
from dataset.types import Segment, SessionManifest
from errors import ClipTooShort
from features.cache import write_feature_cache
from features.logmel import log_mel
from utils.parallel import map_ordered


logger = logging.getLogger(__name__)


def crop_bounds(segment: Segment, crop_seconds: Optional[float]) -> tuple[float, float]:
    """片段中央 crop_seconds 秒的起止时间（None 表示整段）"""
    if crop_seconds is None or crop_seconds >= segment.duration_s:
        return segment.start_s, segment.end_s
    center = (segment.start_s + segment.end_s) / 2
    return center - crop_seconds / 2, center + crop_seconds / 2


def segment_clip(clip: AudioClip, start_s: float, end_s: float) -> AudioClip:
    """从会话音频中切出 [start_s, end_s) 对应的采样点"""
    start = int(round(start_s * clip.sample_rate))
    stop = int(round(end_s * clip.sample_rate))
    if start < 0 or stop > len(clip.samples):
        raise ClipTooShort(f"片段 [{start_s}, {end_s}) 超出会话音频范围")
    return AudioClip(
        samples=clip.samples[start:stop],
        sample_rate=clip.sample_rate,
        channel_count_original=clip.channel_count_original,
    )


def featurize_segments(
    segments: list[Segment],
    sessions: list[SessionManifest],
    corpus_dir: str | Path,
    features_dir: str | Path,
    stft_cfg: StftConfig,
    mel_cfg: MelConfig,
    crop_seconds: Optional[float] = None,
    workers: int = 1,
) -> list[Segment]:
    """
    为全部片段计算 log-Mel 并写入缓存

    Args:
        segments: 片段列表
        sessions: 会话清单（用于定位音频）
        corpus_dir: 语料目录
        features_dir: 特征输出目录
        stft_cfg: STFT 配置
        mel_cfg: Mel 配置
        crop_seconds: 可选的中央裁剪时长
        workers: 线程数

    Returns:
        填好 feature_path 的片段列表（顺序与输入一致）
    """
    corpus_dir = Path(corpus_dir)
    features_dir = Path(features_dir)
    audio_of = {s.session_id: corpus_dir / s.audio_path for s in sessions}

    by_session: dict[str, list[Segment]] = defaultdict(list)
    for segment in segments:
        by_session[segment.session_id].append(segment)

    def process(session_id: str) -> dict[str, str]:
        clip = require_rate(read_wav(audio_of[session_id]), mel_cfg.sample_rate)
        paths = {}
        for segment in by_session[session_id]:
            start_s, end_s = crop_bounds(segment, crop_seconds)
            spectrogram = log_mel(segment_clip(clip, start_s, end_s), stft_cfg, mel_cfg)
            feature_path = features_dir / f"{segment.segment_id}.lm"
            write_feature_cache(feature_path, spectrogram.values)
            paths[segment.segment_id] = str(feature_path)
        logger.debug(f"会话 {session_id}: {len(paths)} 个片段完成特征提取")
        return paths

    feature_paths: dict[str, str] = {}
    for result in map_ordered(process, sorted(by_session), workers):
        feature_paths.update(result)

    logger.info(f"特征提取完成: {len(feature_paths)} 个片段, {len(by_session)} 个会话")
    return [s.model_copy(update={"feature_path": feature_paths[s.segment_id]}) for s in segments]
