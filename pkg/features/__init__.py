"""
StrideSense 特征提取模块
"""

from features.logmel import (
    LogMelSpectrogram,
    frame_count,
    hann_window,
    hz_to_mel,
    log_mel,
    mel_filterbank,
    mel_to_hz,
    stft,
)
from features.cache import read_feature_cache, write_feature_cache

__all__ = [
    "LogMelSpectrogram",
    "frame_count",
    "hann_window",
    "hz_to_mel",
    "log_mel",
    "mel_filterbank",
    "mel_to_hz",
    "stft",
    "read_feature_cache",
    "write_feature_cache",
]
