"""
StrideSense 音频读写模块
"""

from audio.wav import (
    AudioClip,
    WavInfo,
    decode_wav,
    downmix_to_mono,
    encode_wav,
    pack_wav,
    probe_wav,
    quantize_pcm16,
    read_wav,
    require_rate,
    write_wav,
)

__all__ = [
    "AudioClip",
    "WavInfo",
    "decode_wav",
    "downmix_to_mono",
    "encode_wav",
    "pack_wav",
    "probe_wav",
    "quantize_pcm16",
    "read_wav",
    "require_rate",
    "write_wav",
]
