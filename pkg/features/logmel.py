"""
log-Mel 频谱提取

帧划分不做中心填充：第 t 帧覆盖 [t·hop, t·hop+window)，
30 秒 16 kHz 片段固定得到 2997 帧。
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from audio.wav import AudioClip, require_rate
from config_loader import MelConfig, StftConfig
from errors import ClipTooShort, DegenerateFilter


LOG_FLOOR = 1e-10


@dataclass(frozen=True)
class LogMelSpectrogram:
    """log-Mel 频谱，形状 (n_frames, n_mels)"""
    values: np.ndarray
    hop_seconds: float
    n_mels: int

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]


def frame_count(n_samples: int, window_length: int, hop_length: int) -> int:
    """给定采样点数时的帧数 1 + floor((n − window)/hop)"""
    if n_samples < window_length:
        raise ClipTooShort(f"片段长度 {n_samples} 小于窗长 {window_length}")
    return 1 + (n_samples - window_length) // hop_length


def hann_window(n: int) -> np.ndarray:
    """
    周期 Hann 窗 w[k] = 0.5·(1 − cos(2πk/n))

    Args:
        n: 窗长

    Returns:
        长度为 n 的窗
    """
    if n < 1:
        raise ValueError("窗长必须 ≥ 1")
    k = np.arange(n)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * k / n))


def stft(samples: np.ndarray, cfg: StftConfig) -> np.ndarray:
    """
    短时傅里叶变换（仅非负频率）

    Args:
        samples: 单声道幅值
        cfg: STFT 配置

    Returns:
        复数矩阵 (n_frames, fft_size/2+1)
    """
    samples = np.asarray(samples, dtype=np.float64)
    frame_count(len(samples), cfg.window_length, cfg.hop_length)
    frames = sliding_window_view(samples, cfg.window_length)[:: cfg.hop_length]
    windowed = frames * hann_window(cfg.window_length)
    return np.fft.rfft(windowed, n=cfg.fft_size, axis=1)


def hz_to_mel(freq):
    """线性频率转 Mel：m(f) = 2595·log10(1 + f/700)"""
    return 2595.0 * np.log10(1.0 + np.asarray(freq, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    """Mel 转线性频率"""
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(cfg: MelConfig, fft_size: int) -> np.ndarray:
    """
    三角形 Mel 滤波器组，峰值在 Mel 刻度上等距分布，峰值权重为 1（不做面积归一化）

    Args:
        cfg: Mel 配置
        fft_size: FFT 点数

    Returns:
        权重矩阵 (n_mels, fft_size/2+1)
    """
    n_bins = fft_size // 2 + 1
    fft_freqs = np.arange(n_bins) * cfg.sample_rate / fft_size
    mel_points = np.linspace(hz_to_mel(cfg.f_min), hz_to_mel(cfg.f_max), cfg.n_mels + 2)
    hz_points = mel_to_hz(mel_points)

    weights = np.zeros((cfg.n_mels, n_bins))
    for m in range(cfg.n_mels):
        lower, center, upper = hz_points[m], hz_points[m + 1], hz_points[m + 2]
        rising = (fft_freqs - lower) / (center - lower)
        falling = (upper - fft_freqs) / (upper - center)
        weights[m] = np.maximum(0.0, np.minimum(rising, falling))
        if not np.any(weights[m] > 0):
            raise DegenerateFilter(
                f"第 {m} 个 Mel 滤波器 [{lower:.1f}, {upper:.1f}] Hz 内没有 FFT 频点"
            )
    return weights


def log_mel(clip: AudioClip, stft_cfg: StftConfig, mel_cfg: MelConfig) -> LogMelSpectrogram:
    """
    提取 log-Mel 频谱：|STFT|² 经滤波器组投影后取 ln(max(x, 1e−10))

    Args:
        clip: 单声道音频（采样率必须与 Mel 配置一致）
        stft_cfg: STFT 配置
        mel_cfg: Mel 配置

    Returns:
        LogMelSpectrogram
    """
    require_rate(clip, mel_cfg.sample_rate)
    power = np.abs(stft(clip.samples, stft_cfg)) ** 2
    mel_energy = power @ mel_filterbank(mel_cfg, stft_cfg.fft_size).T
    values = np.log(np.maximum(mel_energy, LOG_FLOOR))
    return LogMelSpectrogram(
        values=values,
        hop_seconds=stft_cfg.hop_length / clip.sample_rate,
        n_mels=mel_cfg.n_mels,
    )
