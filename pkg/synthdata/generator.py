"""
合成语料生成器

每个会话的音频由三部分叠加：
- 低频脚步冲击（约 60 Hz 的衰减正弦，按步频周期出现）
- 以 2 kHz 为中心的带限噪声，其 RMS 随瞬时 RPE 仿射上升（模拟粗重呼吸）
- 白噪声底

RPE 轨迹从约 8 上升到约 17，中段平缓，叠加有界噪声，并截断在 [6, 20]。
所有随机量都由 (主种子, 跑者, 会话序号) 派生，结果与线程数无关。
"""

import logging
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from audio.wav import pack_wav, quantize_pcm16
from config_loader import SynthConfig
from dataset.manifest import write_manifest
from dataset.types import (
    AGE_RANGES,
    RPE_MAX,
    RPE_MIN,
    SEXES,
    AnswerEvent,
    RunnerProfile,
    SessionManifest,
)
from errors import ArtifactIOError, InvalidConfig
from utils.parallel import map_ordered


logger = logging.getLogger(__name__)

SURFACES = ("asphalt", "gravel", "concrete")

BLOCK_SECONDS = 10.0
NOISE_KNOT_SECONDS = 60.0
STEP_FREQ_HZ = 60.0
STEP_DECAY_S = 0.03
STEP_LENGTH_S = 0.15
STEP_JITTER = 0.02
SURFACE_SWITCH_P = 0.2

# 参考队列：48 名跑者的 年龄段 × 性别 分布
REFERENCE_COUNTS: dict[tuple[str, str], int] = {
    ("21-30", "M"): 5, ("21-30", "F"): 7,
    ("31-40", "M"): 8, ("31-40", "F"): 8,
    ("41-50", "M"): 2, ("41-50", "F"): 4,
    ("51-60", "M"): 6, ("51-60", "F"): 8,
}


@dataclass
class DemographicsPlan:
    """每个 (年龄段, 性别) 单元格的跑者人数"""
    counts: dict[tuple[str, str], int] = field(default_factory=dict)

    def __post_init__(self):
        for (age_range, sex), count in self.counts.items():
            if age_range not in AGE_RANGES or sex not in SEXES:
                raise InvalidConfig(f"未知的人口统计单元格: ({age_range}, {sex})")
            if count < 0:
                raise InvalidConfig(f"单元格 ({age_range}, {sex}) 人数为负")
        if self.total < 1:
            raise InvalidConfig("人口统计计划至少需要 1 名跑者")

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @classmethod
    def single(cls, age_range: str = "31-40", sex: str = "F", count: int = 1) -> "DemographicsPlan":
        return cls({(age_range, sex): count})

    @classmethod
    def reference(cls, n_runners: int) -> "DemographicsPlan":
        """
        按参考队列的比例分配 n_runners 名跑者（最大余数法）

        Args:
            n_runners: 跑者总数

        Returns:
            DemographicsPlan
        """
        if n_runners < 1:
            raise InvalidConfig("跑者人数必须 ≥ 1")
        cells = list(REFERENCE_COUNTS)
        cohort = sum(REFERENCE_COUNTS.values())
        quotas = [n_runners * REFERENCE_COUNTS[c] / cohort for c in cells]
        counts = [int(q) for q in quotas]
        remainder = n_runners - sum(counts)
        # 小数部分大的优先，并列按单元格顺序
        order = sorted(range(len(cells)), key=lambda i: (-(quotas[i] - counts[i]), i))
        for i in order[:remainder]:
            counts[i] += 1
        return cls({c: n for c, n in zip(cells, counts) if n > 0})

    def profiles(self) -> list[RunnerProfile]:
        """按单元格顺序生成跑者档案（R001, R002, ...）"""
        profiles = []
        for age_range in AGE_RANGES:
            for sex in SEXES:
                for _ in range(self.counts.get((age_range, sex), 0)):
                    runner_id = f"R{len(profiles) + 1:03d}"
                    profiles.append(RunnerProfile(runner_id=runner_id, age_range=age_range, sex=sex))
        return profiles


def _runner_key(runner_id: str) -> int:
    return zlib.crc32(runner_id.encode("utf-8"))


def session_rng(cfg: SynthConfig, runner_id: str, session_index: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, _runner_key(runner_id), session_index + 1])


def _ease(u: np.ndarray) -> np.ndarray:
    """单调缓动曲线，中段斜率为 0"""
    v = 2.0 * u - 1.0
    return 0.5 + 0.5 * np.sign(v) * np.abs(v) ** 3


class RpeTrajectory:
    """单个会话的连续 RPE 轨迹"""

    def __init__(self, cfg: SynthConfig, rng: np.random.Generator):
        self.duration_s = cfg.session_duration_s
        self.start = cfg.rpe_start + rng.normal(0.0, 0.5)
        self.end = cfg.rpe_end + rng.normal(0.0, 1.0)
        n_knots = max(2, int(np.ceil(self.duration_s / NOISE_KNOT_SECONDS)) + 1)
        self.knot_times = np.linspace(0.0, self.duration_s, n_knots)
        self.knot_noise = rng.normal(0.0, cfg.rpe_noise, size=n_knots)

    def __call__(self, t: np.ndarray) -> np.ndarray:
        u = np.clip(np.asarray(t, dtype=np.float64) / self.duration_s, 0.0, 1.0)
        value = self.start + (self.end - self.start) * _ease(u)
        value = value + np.interp(t, self.knot_times, self.knot_noise)
        return np.clip(value, RPE_MIN, RPE_MAX)


def _question_times(cfg: SynthConfig, rng: np.random.Generator) -> list[float]:
    times = []
    t = rng.uniform(cfg.question_interval_min_s, cfg.question_interval_max_s)
    while t < cfg.session_duration_s:
        times.append(round(float(t), 2))
        t += rng.uniform(cfg.question_interval_min_s, cfg.question_interval_max_s)
    return times


def _sample_events(cfg: SynthConfig, trajectory: RpeTrajectory,
                   rng: np.random.Generator) -> tuple[AnswerEvent, ...]:
    events = []
    surface = SURFACES[int(rng.integers(len(SURFACES)))]
    for t in _question_times(cfg, rng):
        rpe = int(np.clip(np.round(trajectory(np.array([t]))[0]), RPE_MIN, RPE_MAX))
        wellbeing = int(np.clip(np.round(4.0 - 0.6 * (rpe - RPE_MIN) + rng.normal(0.0, 1.0)), -5, 5))
        if rng.random() < SURFACE_SWITCH_P:
            surface = SURFACES[int(rng.integers(len(SURFACES)))]
        events.append(AnswerEvent(time_s=t, fatigue=rpe, wellbeing=wellbeing, surface=surface))
    return tuple(events)


def _step_kernel(cfg: SynthConfig) -> np.ndarray:
    tau = np.arange(int(STEP_LENGTH_S * cfg.sample_rate)) / cfg.sample_rate
    return cfg.step_amplitude * np.exp(-tau / STEP_DECAY_S) * np.sin(2 * np.pi * STEP_FREQ_HZ * tau)


def _step_onsets(cfg: SynthConfig, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    period = 1.0 / cfg.step_rate_hz
    count = int(cfg.session_duration_s / period) + 2
    intervals = period * (1.0 + rng.uniform(-STEP_JITTER, STEP_JITTER, size=count))
    onsets = np.round(np.cumsum(intervals) * cfg.sample_rate).astype(np.int64)
    return onsets[onsets < n_samples]


def _band_noise(cfg: SynthConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    """单位 RMS（期望意义下）的带限噪声，通过频域掩码生成"""
    white = rng.standard_normal(n)
    spectrum = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, d=1.0 / cfg.sample_rate)
    low = cfg.breathing_center_hz - cfg.breathing_bandwidth_hz / 2
    high = cfg.breathing_center_hz + cfg.breathing_bandwidth_hz / 2
    mask = (freqs >= low) & (freqs <= high)
    kept = int(mask.sum())
    if kept == 0:
        return np.zeros(n)
    band = np.fft.irfft(spectrum * mask, n=n)
    return band * np.sqrt((n / 2) / kept)


def render_session_audio(cfg: SynthConfig, trajectory: RpeTrajectory,
                         rng: np.random.Generator) -> np.ndarray:
    """
    按 10 秒分块合成会话音频并量化为 int16

    Returns:
        int16 采样数组
    """
    n_samples = int(round(cfg.session_duration_s * cfg.sample_rate))
    pcm = np.empty(n_samples, dtype="<i2")
    kernel = _step_kernel(cfg)
    onsets = _step_onsets(cfg, n_samples, rng)
    block = int(BLOCK_SECONDS * cfg.sample_rate)

    for start in range(0, n_samples, block):
        stop = min(start + block, n_samples)
        n = stop - start
        t = (start + np.arange(n)) / cfg.sample_rate

        amplitude = cfg.breathing_base_rms + cfg.breathing_gain * (trajectory(t) - RPE_MIN)
        signal = amplitude * _band_noise(cfg, n, rng)
        signal += cfg.noise_floor * rng.standard_normal(n)

        active = onsets[(onsets < stop) & (onsets + len(kernel) > start)]
        for onset in active:
            lo = max(onset, start)
            hi = min(onset + len(kernel), stop)
            signal[lo - start:hi - start] += kernel[lo - onset:hi - onset]

        pcm[start:stop] = quantize_pcm16(signal)
    return pcm


def generate_session(
    cfg: SynthConfig,
    runner: RunnerProfile,
    session_index: int,
) -> tuple[bytes, SessionManifest]:
    """
    生成一个会话的 WAV 字节与会话清单

    Args:
        cfg: 生成器配置
        runner: 跑者档案
        session_index: 该跑者的会话序号（从 0 开始）

    Returns:
        (WAV 字节, SessionManifest)
    """
    if session_index < 0:
        raise InvalidConfig(f"会话序号不能为负: {session_index}")
    rng = session_rng(cfg, runner.runner_id, session_index)
    trajectory = RpeTrajectory(cfg, rng)
    events = _sample_events(cfg, trajectory, rng)
    pcm = render_session_audio(cfg, trajectory, rng)

    session_id = f"{runner.runner_id}-S{session_index + 1}"
    manifest = SessionManifest(
        session_id=session_id,
        runner_id=runner.runner_id,
        audio_path=f"audio/{session_id}.wav",
        events=events,
    )
    return pack_wav(pcm, cfg.sample_rate), manifest


def sessions_for(cfg: SynthConfig, runner: RunnerProfile) -> int:
    """跑者的会话数，在 [min, max] 内均匀抽取"""
    rng = np.random.default_rng([cfg.seed, _runner_key(runner.runner_id), 0])
    return int(rng.integers(cfg.min_sessions_per_runner, cfg.max_sessions_per_runner + 1))


def generate_corpus(
    cfg: SynthConfig,
    out_dir: str | Path,
    plan: Optional[DemographicsPlan] = None,
    workers: int = 1,
) -> tuple[list[SessionManifest], list[RunnerProfile]]:
    """
    生成完整语料目录（audio/*.wav 与三个清单表）

    Args:
        cfg: 生成器配置
        out_dir: 输出目录
        plan: 人口统计计划（默认按参考队列分配 cfg.n_runners 人）
        workers: 线程数

    Returns:
        (会话清单列表, 跑者档案列表)
    """
    out_dir = Path(out_dir)
    plan = plan or DemographicsPlan.reference(cfg.n_runners)
    profiles = plan.profiles()
    jobs = [(runner, index) for runner in profiles for index in range(sessions_for(cfg, runner))]
    logger.info(f"开始生成合成语料: {len(profiles)} 名跑者, {len(jobs)} 个会话")

    def make(job: tuple[RunnerProfile, int]) -> SessionManifest:
        runner, index = job
        wav, manifest = generate_session(cfg, runner, index)
        path = out_dir / manifest.audio_path
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(wav)
        except OSError as e:
            raise ArtifactIOError(f"写出音频失败: {path}: {e}") from e
        logger.debug(f"会话 {manifest.session_id}: {len(manifest.events)} 个回答")
        return manifest

    sessions = map_ordered(make, jobs, workers)
    write_manifest(out_dir, sessions, profiles)
    logger.info(f"合成语料已写出: {out_dir}")
    return sessions, profiles


def band_log_energy(samples: np.ndarray, sample_rate: int, low_hz: float, high_hz: float) -> float:
    """
    频带 [low_hz, high_hz] 内的平均功率（取自然对数）

    Args:
        samples: 单声道采样
        sample_rate: 采样率
        low_hz: 下限
        high_hz: 上限

    Returns:
        log 能量
    """
    samples = np.asarray(samples, dtype=np.float64)
    power = np.abs(np.fft.rfft(samples)) ** 2 / max(len(samples), 1)
    freqs = np.fft.rfftfreq(len(samples), d=1.0 / sample_rate)
    band = power[(freqs >= low_hz) & (freqs <= high_hz)]
    energy = band.sum() / max(len(samples), 1)
    return float(np.log(max(energy, 1e-20)))
