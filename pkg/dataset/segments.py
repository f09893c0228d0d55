"""
片段切分

每个回答事件取前后各 15 秒，越出会话音频边界的候选片段直接丢弃（不填充）。
相邻事件产生的重叠片段都保留。
"""

import logging
from pathlib import Path
from typing import Optional

from dataset.tables import line_of, read_table, write_table
from dataset.types import Segment, SessionManifest
from errors import EmptyAudio, EventsNotSorted, ParseError, RangeViolation


logger = logging.getLogger(__name__)

SEGMENT_COLUMNS = [
    "segment_id", "session_id", "runner_id", "start_s", "end_s",
    "fatigue", "wellbeing", "surface", "feature_path",
]


def segment_session(
    manifest: SessionManifest,
    audio_duration_s: float,
    half_window_s: float = 15.0,
) -> list[Segment]:
    """
    把一个会话切分为以回答为中心的标注片段

    Args:
        manifest: 会话清单
        audio_duration_s: 会话音频时长（秒）
        half_window_s: 回答前后各取的秒数

    Returns:
        片段列表（按事件顺序）
    """
    if audio_duration_s <= 0:
        raise EmptyAudio(f"会话 {manifest.session_id} 的音频时长必须为正")

    times = [e.time_s for e in manifest.events]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise EventsNotSorted(f"会话 {manifest.session_id} 的回答时间不是严格递增")

    segments = []
    for index, event in enumerate(manifest.events):
        start = event.time_s - half_window_s
        end = event.time_s + half_window_s
        if start < 0 or end > audio_duration_s:
            logger.warning(
                f"丢弃越界片段: 会话 {manifest.session_id} t={event.time_s:.2f}s "
                f"窗口 [{start:.2f}, {end:.2f}] 超出 [0, {audio_duration_s:.2f}]"
            )
            continue
        segments.append(Segment(
            segment_id=f"{manifest.session_id}-{index:03d}",
            session_id=manifest.session_id,
            runner_id=manifest.runner_id,
            start_s=start,
            end_s=end,
            fatigue=event.fatigue,
            wellbeing=event.wellbeing,
            surface=event.surface,
        ))
    return segments


def write_segments(path: str | Path, segments: list[Segment]) -> None:
    """写出片段表"""
    rows = []
    for segment in segments:
        row = segment.model_dump()
        row["feature_path"] = segment.feature_path or ""
        rows.append(row)
    write_table(path, rows, SEGMENT_COLUMNS)


def read_segments(path: str | Path, segment_seconds: Optional[float] = None) -> list[Segment]:
    """
    读取片段表

    Args:
        path: 片段表路径
        segment_seconds: 期望的片段时长（给出时逐行校验 end_s − start_s）

    Returns:
        片段列表
    """
    frame = read_table(path, SEGMENT_COLUMNS)
    segments = []
    for index, row in frame.iterrows():
        try:
            segments.append(Segment(
                segment_id=row["segment_id"],
                session_id=row["session_id"],
                runner_id=row["runner_id"],
                start_s=float(row["start_s"]),
                end_s=float(row["end_s"]),
                fatigue=int(row["fatigue"]),
                wellbeing=int(row["wellbeing"]),
                surface=row["surface"],
                feature_path=row["feature_path"] or None,
            ))
        except ValueError as e:
            raise ParseError(str(e), path=str(path), line=line_of(index)) from e
        if segment_seconds is not None and abs(segments[-1].duration_s - segment_seconds) > 1e-6:
            raise RangeViolation(
                f"片段时长 {segments[-1].duration_s} s，期望 {segment_seconds} s",
                path=str(path), line=line_of(index), field="end_s",
            )
    return segments
