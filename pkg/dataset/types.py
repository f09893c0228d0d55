"""
数据集领域类型

跑者档案、回答事件、会话清单与 30 秒标注片段。
取值约束由 pydantic 校验。
"""

from typing import Literal, Optional, get_args

from pydantic import BaseModel, ConfigDict, Field, model_validator


AgeRange = Literal["21-30", "31-40", "41-50", "51-60"]
Sex = Literal["M", "F"]
Partition = Literal["train", "dev", "test"]

PARTITIONS: tuple[Partition, ...] = ("train", "dev", "test")

# Borg RPE 量表
RPE_MIN = 6
RPE_MAX = 20

# 分层报告的单元格顺序（年龄段在外层）
AGE_RANGES: tuple[str, ...] = get_args(AgeRange)
SEXES: tuple[str, ...] = get_args(Sex)


class RunnerProfile(BaseModel):
    """跑者档案"""
    model_config = ConfigDict(frozen=True)

    runner_id: str = Field(min_length=1)
    age_range: AgeRange
    sex: Sex


class AnswerEvent(BaseModel):
    """跑步过程中的一次语音回答"""
    model_config = ConfigDict(frozen=True)

    time_s: float = Field(ge=0.0)                # 距会话开始的秒数
    fatigue: int = Field(ge=RPE_MIN, le=RPE_MAX)  # Borg RPE
    wellbeing: int = Field(ge=-5, le=5)
    surface: str = ""                            # 自由文本，原样保存


class SessionManifest(BaseModel):
    """一次跑步会话"""
    model_config = ConfigDict(frozen=True)

    session_id: str = Field(min_length=1)
    runner_id: str = Field(min_length=1)
    audio_path: str                              # 相对语料目录的路径
    events: tuple[AnswerEvent, ...] = ()


class Segment(BaseModel):
    """以回答为中心的 30 秒标注片段"""
    model_config = ConfigDict(frozen=True)

    segment_id: str
    session_id: str
    runner_id: str
    start_s: float
    end_s: float
    fatigue: int = Field(ge=RPE_MIN, le=RPE_MAX)
    wellbeing: int = Field(ge=-5, le=5)
    surface: str = ""
    feature_path: Optional[str] = None

    @model_validator(mode="after")
    def _check_window(self) -> "Segment":
        if self.start_s < 0 or self.end_s <= self.start_s:
            raise ValueError(f"片段窗口不合法: [{self.start_s}, {self.end_s}]")
        return self

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s
