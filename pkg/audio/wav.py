"""
WAV 编解码

只接受 RIFF/WAVE 容器中的 16 bit 小端 PCM，单声道或双声道。
立体声按均值下混为单声道，采样率原样保留，不做重采样。
"""

import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from errors import (
    ArtifactIOError,
    EmptyAudio,
    LengthMismatch,
    MalformedContainer,
    SampleRateMismatch,
    UnsupportedEncoding,
)


logger = logging.getLogger(__name__)

PCM_FORMAT = 1
PCM_SCALE = 32768.0


@dataclass(frozen=True)
class AudioClip:
    """单声道音频片段"""
    samples: np.ndarray              # float64，取值范围 [-1, 1)
    sample_rate: int                 # 容器头中的采样率
    channel_count_original: int = 1  # 解码前的声道数

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate


def downmix_to_mono(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """
    双声道下混为单声道：逐点取均值 (L+R)/2

    Args:
        left: 左声道幅值
        right: 右声道幅值

    Returns:
        单声道幅值
    """
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    if left.shape != right.shape:
        raise LengthMismatch(f"声道长度不一致: {left.shape} vs {right.shape}")
    return (left + right) / 2.0


def _iter_chunks(data: bytes):
    """遍历 RIFF 子块，产出 (chunk_id, payload)"""
    offset = 12
    while offset + 8 <= len(data):
        chunk_id, size = struct.unpack_from("<4sI", data, offset)
        body_start = offset + 8
        body_end = body_start + size
        if body_end > len(data):
            raise MalformedContainer(f"子块 {chunk_id!r} 越过文件末尾")
        yield chunk_id, data[body_start:body_end]
        # 奇数长度的子块后有一个填充字节
        offset = body_end + (size & 1)


def _parse_container(data: bytes) -> tuple[int, int, int, bytes]:
    """校验容器与 fmt 子块，返回 (声道数, 采样率, 块对齐, data 负载)"""
    if len(data) < 12:
        raise MalformedContainer("文件过短，缺少 RIFF 头")
    riff, _, wave = struct.unpack_from("<4sI4s", data, 0)
    if riff != b"RIFF" or wave != b"WAVE":
        raise MalformedContainer("不是 RIFF/WAVE 容器")

    fmt = None
    payload = None
    for chunk_id, body in _iter_chunks(data):
        if chunk_id == b"fmt ":
            if fmt is not None:
                raise MalformedContainer("存在重复的 fmt 子块")
            if len(body) < 16:
                raise MalformedContainer("fmt 子块长度不足 16 字节")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            if fmt is None:
                raise MalformedContainer("data 子块出现在 fmt 之前")
            payload = body
            # data 之后的子块一律忽略
            break

    if fmt is None:
        raise MalformedContainer("缺少 fmt 子块")
    if payload is None:
        raise MalformedContainer("缺少 data 子块")

    audio_format, channels, sample_rate, _, block_align, bits = fmt
    if audio_format != PCM_FORMAT:
        raise UnsupportedEncoding(f"只支持 PCM 编码，当前格式码 {audio_format}")
    if bits != 16:
        raise UnsupportedEncoding(f"只支持 16 bit，当前 {bits} bit")
    if channels not in (1, 2):
        raise UnsupportedEncoding(f"只支持 1 或 2 个声道，当前 {channels}")
    if sample_rate <= 0 or block_align != channels * 2:
        raise MalformedContainer("fmt 子块中的采样率或块对齐无效")

    return channels, sample_rate, block_align, payload


@dataclass(frozen=True)
class WavInfo:
    """WAV 头信息"""
    sample_rate: int
    channels: int
    n_frames: int

    @property
    def duration_s(self) -> float:
        return self.n_frames / self.sample_rate


def probe_wav(path: str | Path) -> WavInfo:
    """只解析容器头，不转换采样"""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise ArtifactIOError(f"读取音频失败: {path}: {e}") from e
    channels, sample_rate, block_align, payload = _parse_container(data)
    return WavInfo(sample_rate, channels, len(payload) // block_align)


def decode_wav(data: bytes) -> AudioClip:
    """
    解码 WAV 字节流

    Args:
        data: 完整的 RIFF/WAVE 字节

    Returns:
        单声道 AudioClip
    """
    channels, sample_rate, block_align, payload = _parse_container(data)
    n_frames = len(payload) // block_align
    if n_frames == 0:
        raise EmptyAudio("data 子块中没有音频帧")

    ints = np.frombuffer(payload[: n_frames * block_align], dtype="<i2")
    frames = ints.reshape(n_frames, channels).astype(np.float64) / PCM_SCALE
    if channels == 2:
        samples = downmix_to_mono(frames[:, 0], frames[:, 1])
    else:
        samples = frames[:, 0]

    return AudioClip(samples=samples, sample_rate=sample_rate, channel_count_original=channels)


def encode_wav(samples: np.ndarray, sample_rate: int, channels: int = 1) -> bytes:
    """
    编码为 16 bit PCM WAV

    Args:
        samples: 幅值数组，单声道为 (n,)，双声道为 (n, 2)
        sample_rate: 采样率
        channels: 声道数

    Returns:
        WAV 字节
    """
    samples = np.asarray(samples, dtype=np.float64)
    if channels == 1 and samples.ndim != 1:
        raise UnsupportedEncoding("单声道输入必须是一维数组")
    if channels == 2 and (samples.ndim != 2 or samples.shape[1] != 2):
        raise UnsupportedEncoding("双声道输入形状必须为 (n, 2)")
    if channels not in (1, 2):
        raise UnsupportedEncoding(f"只支持 1 或 2 个声道，当前 {channels}")

    return pack_wav(quantize_pcm16(samples), sample_rate, channels)


def quantize_pcm16(samples: np.ndarray) -> np.ndarray:
    """裁剪到 [-1, 1] 后按 round(x·32768) 量化，饱和到 int16 范围"""
    quantized = np.clip(np.round(np.clip(samples, -1.0, 1.0) * PCM_SCALE), -32768, 32767)
    return quantized.astype("<i2")


def pack_wav(pcm: np.ndarray, sample_rate: int, channels: int = 1) -> bytes:
    """把已量化的 int16 采样打包为 WAV 字节"""
    payload = np.asarray(pcm, dtype="<i2").tobytes()
    block_align = channels * 2
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(payload), b"WAVE",
        b"fmt ", 16, PCM_FORMAT, channels, sample_rate,
        sample_rate * block_align, block_align, 16,
        b"data", len(payload),
    )
    return header + payload


def require_rate(clip: AudioClip, expected: int) -> AudioClip:
    """
    校验采样率，不匹配时报错而不是静默重采样

    Args:
        clip: 音频片段
        expected: 期望采样率

    Returns:
        原样返回的片段
    """
    if clip.sample_rate != expected:
        raise SampleRateMismatch(found=clip.sample_rate, expected=expected)
    return clip


def read_wav(path: str | Path) -> AudioClip:
    """读取 WAV 文件"""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise ArtifactIOError(f"读取音频失败: {path}: {e}") from e
    return decode_wav(data)


def write_wav(path: str | Path, samples: np.ndarray, sample_rate: int) -> None:
    """写出单声道 WAV 文件"""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(encode_wav(samples, sample_rate))
    except OSError as e:
        raise ArtifactIOError(f"写出音频失败: {path}: {e}") from e
    logger.debug(f"已写出音频: {path} ({len(samples)} 个采样点)")
