import struct

import numpy as np
import pytest

from audio import (
    AudioClip,
    decode_wav,
    downmix_to_mono,
    encode_wav,
    pack_wav,
    probe_wav,
    read_wav,
    require_rate,
    write_wav,
)
from errors import EmptyAudio, MalformedContainer, SampleRateMismatch, UnsupportedEncoding


def wav_bytes(frames: list[int], channels: int = 1, sample_rate: int = 16000,
              bits: int = 16, audio_format: int = 1) -> bytes:
    payload = struct.pack(f"<{len(frames)}h", *frames)
    block_align = channels * bits // 8
    return struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(payload), b"WAVE",
        b"fmt ", 16, audio_format, channels, sample_rate,
        sample_rate * block_align, block_align, bits,
        b"data", len(payload),
    ) + payload


def test_decode_mono_scaling():
    clip = decode_wav(wav_bytes([0, 16384, -16384, 32767]))
    np.testing.assert_allclose(clip.samples, [0.0, 0.5, -0.5, 32767 / 32768])
    assert clip.sample_rate == 16000
    assert clip.channel_count_original == 1


def test_decode_stereo_symmetric_downmix_is_silent():
    clip = decode_wav(wav_bytes([16384, -16384] * 10, channels=2))
    assert clip.channel_count_original == 2
    assert len(clip.samples) == 10
    assert np.all(clip.samples == 0.0)


def test_sine_round_trip_error_bounded(tmp_path):
    t = np.arange(16000) / 16000
    sine = 0.8 * np.sin(2 * np.pi * 440 * t)
    path = tmp_path / "sine.wav"
    write_wav(path, sine, 16000)
    clip = read_wav(path)
    first = np.max(np.abs(clip.samples - sine))
    assert first <= 1 / 32768

    again = decode_wav(encode_wav(clip.samples, 16000))
    assert np.max(np.abs(again.samples - sine)) <= 1 / 32768


@pytest.mark.parametrize("left, right, expected", [
    ([1, 1], [1, 1], [1, 1]),
    ([1, 0], [0, 1], [0.5, 0.5]),
])
def test_downmix_examples(left, right, expected):
    np.testing.assert_allclose(downmix_to_mono(np.array(left), np.array(right)), expected)


def test_downmix_stays_in_range(rng):
    left = rng.choice([-1.0, 1.0], size=1000)
    right = rng.choice([-1.0, 1.0], size=1000)
    mono = downmix_to_mono(left, right)
    assert mono.min() >= -1.0 and mono.max() <= 1.0


def test_require_rate():
    clip = AudioClip(samples=np.zeros(10), sample_rate=16000)
    assert require_rate(clip, 16000) is clip
    with pytest.raises(SampleRateMismatch):
        require_rate(AudioClip(samples=np.zeros(10), sample_rate=44100), 16000)
    with pytest.raises(SampleRateMismatch):
        require_rate(clip, 48000)


def test_malformed_containers():
    good = wav_bytes([1, 2, 3])
    with pytest.raises(MalformedContainer):
        decode_wav(b"RIFF")
    with pytest.raises(MalformedContainer):
        decode_wav(b"RIFX" + good[4:])
    with pytest.raises(MalformedContainer):
        decode_wav(good[:-4])
    with pytest.raises(UnsupportedEncoding):
        decode_wav(wav_bytes([1, 2, 3], audio_format=3))
    with pytest.raises(EmptyAudio):
        decode_wav(wav_bytes([]))


def test_unsupported_bit_depth():
    data = bytearray(wav_bytes([1, 2, 3, 4]))
    # bits_per_sample 位于 fmt 负载第 14 字节
    struct.pack_into("<H", data, 20 + 14, 24)
    struct.pack_into("<H", data, 20 + 12, 3)
    with pytest.raises(UnsupportedEncoding):
        decode_wav(bytes(data))


def test_unknown_chunks_are_skipped():
    base = wav_bytes([100, -100])
    # fmt 之前插入一个奇数长度的 LIST 子块（带填充字节）
    extra = b"LIST" + struct.pack("<I", 3) + b"abc" + b"\x00"
    data = base[:12] + extra + base[12:]
    clip = decode_wav(data)
    np.testing.assert_allclose(clip.samples, [100 / 32768, -100 / 32768])


def test_encode_clips_and_saturates():
    clip = decode_wav(encode_wav(np.array([2.0, -2.0, 1.0, -1.0]), 16000))
    assert clip.samples[0] == 32767 / 32768
    assert clip.samples[1] == -1.0
    assert clip.samples[2] == 32767 / 32768


def test_wav_header_info(tmp_path):
    path = tmp_path / "header.wav"
    path.write_bytes(pack_wav(np.zeros(32000, dtype="<i2"), 16000))
    info = probe_wav(path)
    assert info.sample_rate == 16000
    assert info.channels == 1
    assert info.n_frames == 32000
    assert info.duration_s == 2.0
