"""
StrideSense 配置加载器

加载和管理配置
"""

import os
import logging
from fractions import Fraction
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, Field, field_validator, model_validator
from dotenv import load_dotenv


# 加载环境变量（只会读取 STRIDESENSE_THREADS）
load_dotenv()

THREADS_ENV = "STRIDESENSE_THREADS"

# CNN14 六个卷积块的全宽通道数
CNN14_CHANNELS = (64, 128, 256, 512, 1024, 2048)


class AudioConfig(BaseModel):
    """音频配置"""
    sample_rate: int = Field(default=16000, gt=0, description="语料采样率 (Hz)")


class StftConfig(BaseModel):
    """短时傅里叶变换配置"""
    window_length: int = Field(default=512, gt=0, description="窗长（采样点，32 ms）")
    hop_length: int = Field(default=160, gt=0, description="帧移（采样点，10 ms）")
    fft_size: int = Field(default=512, gt=0, description="FFT 点数")
    window_kind: Literal["hann"] = Field(default="hann", description="窗函数类型")

    @model_validator(mode="after")
    def _check_lengths(self) -> "StftConfig":
        if not (self.hop_length <= self.window_length <= self.fft_size):
            raise ValueError("需要满足 hop_length ≤ window_length ≤ fft_size")
        return self


class MelConfig(BaseModel):
    """Mel 滤波器组配置"""
    n_mels: int = Field(default=64, ge=1, description="Mel 频带数")
    f_min: float = Field(default=0.0, ge=0.0, description="最低频率 (Hz)")
    f_max: float = Field(default=8000.0, description="最高频率 (Hz)")
    sample_rate: int = Field(default=16000, gt=0, description="采样率 (Hz)")

    @model_validator(mode="after")
    def _check_band(self) -> "MelConfig":
        if not (0 <= self.f_min < self.f_max <= self.sample_rate / 2):
            raise ValueError("需要满足 0 ≤ f_min < f_max ≤ sample_rate/2")
        return self


class DatasetConfig(BaseModel):
    """数据集切分配置"""
    half_window_s: float = Field(default=15.0, gt=0, description="回答前后各取的秒数")
    ratios: tuple[float, float, float] = Field(
        default=(0.56, 0.23, 0.21), description="train/dev/test 比例"
    )
    split_seed: int = Field(default=0, ge=0, description="会话洗牌种子")
    crop_seconds: Optional[float] = Field(
        default=None, gt=0, description="特征提取时只保留片段中央的若干秒（None 表示整段）"
    )

    @field_validator("ratios")
    @classmethod
    def _check_ratios(cls, value: tuple[float, float, float]) -> tuple[float, float, float]:
        if any(r <= 0 for r in value):
            raise ValueError("分区比例必须为正")
        if abs(sum(value) - 1.0) > 1e-9:
            raise ValueError(f"分区比例之和必须为 1，当前为 {sum(value)}")
        return value

    @property
    def segment_seconds(self) -> float:
        return 2 * self.half_window_s


class ModelConfig(BaseModel):
    """CNN14 回归模型配置"""
    width_scale: float = Field(default=1.0, gt=0, description="通道宽度缩放因子")
    dropout_p: float = Field(default=0.2, ge=0.0, lt=1.0, description="Dropout 概率")
    n_mels: int = Field(default=64, ge=1, description="输入 Mel 频带数")
    output_dim: int = Field(default=1, ge=1, description="输出维度（回归为 1）")

    @property
    def block_channels(self) -> list[int]:
        scale = Fraction(self.width_scale).limit_denominator(4096)
        return [int(c * scale) for c in CNN14_CHANNELS]

    @property
    def embedding_dim(self) -> int:
        return self.block_channels[-1]

    @model_validator(mode="after")
    def _check_channels(self) -> "ModelConfig":
        channels = self.block_channels
        if channels[-1] < 1:
            raise ValueError("width_scale·2048 必须 ≥ 1")
        if channels[0] < 1 or any(a >= b for a, b in zip(channels, channels[1:])):
            raise ValueError(f"缩放后的通道数必须严格递增且为正: {channels}")
        return self


class TrainingConfig(BaseModel):
    """训练配置"""
    epochs: int = Field(default=50, ge=1, description="训练轮数")
    batch_size: int = Field(default=24, ge=2, description="批大小（CCC 需要至少 2 个样本）")
    learning_rate: float = Field(default=0.001, gt=0, description="学习率")
    momentum: float = Field(default=0.9, ge=0.0, lt=1.0, description="Nesterov 动量")
    weight_decay: float = Field(default=0.0001, ge=0.0, description="L2 权重衰减")
    shuffle_seed: int = Field(default=0, ge=0, description="每轮洗牌种子")
    init_seed: int = Field(default=0, ge=0, description="参数初始化与 dropout 种子")
    prefetch: int = Field(default=2, ge=1, description="预取队列长度")
    selection_metric: Literal["dev_ccc", "dev_mae"] = Field(
        default="dev_ccc", description="选模指标（dev_ccc 取最大，dev_mae 取最小）"
    )


class EvaluationConfig(BaseModel):
    """评估配置"""
    clip_predictions: bool = Field(default=False, description="输出表中附加裁剪到 [6,20] 的预测列")
    batch_size: int = Field(default=24, ge=1, description="推理批大小")


class SynthConfig(BaseModel):
    """合成语料配置"""
    n_runners: int = Field(default=16, ge=1, description="跑者人数")
    min_sessions_per_runner: int = Field(default=1, ge=1, le=5)
    max_sessions_per_runner: int = Field(default=5, ge=1, le=5)
    session_duration_s: float = Field(default=2700.0, gt=0, description="会话时长（约 45 分钟）")
    question_interval_min_s: float = Field(default=180.0, gt=0, description="提问间隔下限")
    question_interval_max_s: float = Field(default=300.0, gt=0, description="提问间隔上限")
    rpe_start: float = Field(default=8.0, description="轨迹起点 RPE")
    rpe_end: float = Field(default=17.0, description="轨迹终点 RPE")
    rpe_noise: float = Field(default=0.6, ge=0.0, description="轨迹噪声幅度")
    breathing_base_rms: float = Field(default=0.02, ge=0.0, description="呼吸带基础 RMS")
    breathing_gain: float = Field(default=0.01, ge=0.0, description="每 RPE 单位的呼吸带 RMS 增量")
    breathing_center_hz: float = Field(default=2000.0, gt=0)
    breathing_bandwidth_hz: float = Field(default=400.0, gt=0)
    step_rate_hz: float = Field(default=2.7, gt=0, description="步频")
    step_amplitude: float = Field(default=0.3, ge=0.0)
    noise_floor: float = Field(default=0.005, ge=0.0, description="白噪声底 RMS")
    sample_rate: int = Field(default=16000, gt=0)
    seed: int = Field(default=0, ge=0, description="主种子")

    @model_validator(mode="after")
    def _check_ranges(self) -> "SynthConfig":
        if self.min_sessions_per_runner > self.max_sessions_per_runner:
            raise ValueError("min_sessions_per_runner 不能大于 max_sessions_per_runner")
        if self.question_interval_min_s > self.question_interval_max_s:
            raise ValueError("提问间隔下限不能大于上限")
        if self.breathing_center_hz + self.breathing_bandwidth_hz / 2 >= self.sample_rate / 2:
            raise ValueError("呼吸频带超出奈奎斯特频率")
        return self


class RuntimeConfig(BaseModel):
    """运行时配置"""
    threads: Optional[int] = Field(default=None, ge=1, description="工作线程数")

    @model_validator(mode="after")
    def _resolve_threads(self) -> "RuntimeConfig":
        # 未设置时依次取环境变量、CPU 核数
        if self.threads is None:
            env_value = os.getenv(THREADS_ENV, "").strip()
            if env_value:
                try:
                    threads = int(env_value)
                except ValueError:
                    raise ValueError(f"{THREADS_ENV} 必须是正整数，当前为 {env_value!r}") from None
                if threads < 1:
                    raise ValueError(f"{THREADS_ENV} 必须是正整数，当前为 {threads}")
                self.threads = threads
            else:
                self.threads = os.cpu_count() or 1
        return self


class LoggingConfig(BaseModel):
    """日志配置"""
    level: str = Field(default="INFO")
    format: str = Field(default="%(asctime)s - %(name)s - %(levelname)s - %(message)s")


class Config(BaseModel):
    """主配置类"""
    audio: AudioConfig = Field(default_factory=AudioConfig)
    stft: StftConfig = Field(default_factory=StftConfig)
    mel: MelConfig = Field(default_factory=MelConfig)
    dataset: DatasetConfig = Field(default_factory=DatasetConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    training: TrainingConfig = Field(default_factory=TrainingConfig)
    evaluation: EvaluationConfig = Field(default_factory=EvaluationConfig)
    synth: SynthConfig = Field(default_factory=SynthConfig)
    runtime: RuntimeConfig = Field(default_factory=RuntimeConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)

    @classmethod
    def load(cls, config_path: Optional[str] = None) -> "Config":
        """
        加载配置

        Args:
            config_path: 配置文件路径（可选）

        Returns:
            配置对象
        """
        config_data = {}

        if config_path:
            path = Path(config_path)
            if path.exists():
                with open(path, "r", encoding="utf-8") as f:
                    config_data = yaml.safe_load(f) or {}

        return cls(**config_data)

    def snapshot(self) -> dict:
        """返回可写入运行清单的配置快照"""
        return self.model_dump(mode="json", exclude={"logging"})


def setup_logging(config: LoggingConfig) -> None:
    """
    设置日志

    Args:
        config: 日志配置
    """
    logging.basicConfig(
        level=getattr(logging, config.level.upper(), logging.INFO),
        format=config.format,
    )
