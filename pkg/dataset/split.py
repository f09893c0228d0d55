"""
分区划分

按会话整体分配：会话用带种子的随机数打乱后依次累加到 train、dev、test，
当前分区的片段份额达到目标比例后切换到下一个分区。
同一跑者可以出现在多个分区（与受试者相关的划分），但任何会话只属于一个分区。
"""

import logging
import random
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from dataset.tables import line_of, read_table, write_table
from dataset.types import PARTITIONS, RPE_MAX, RPE_MIN, Partition, Segment
from errors import ParseError, TooFewSessions


logger = logging.getLogger(__name__)

PARTITION_COLUMNS = ["segment_id", "session_id", "partition"]
HISTOGRAM_COLUMNS = ["rpe", *PARTITIONS]


@dataclass(frozen=True)
class PartitionSplit:
    """片段到分区的映射"""
    assignment: dict[str, Partition]
    session_of: dict[str, str]
    seed: Optional[int] = None

    def segments_in(self, partition: Partition, segments: list[Segment]) -> list[Segment]:
        """按原顺序取出属于某个分区的片段"""
        return [s for s in segments if self.assignment.get(s.segment_id) == partition]

    def sessions_in(self, partition: Partition) -> set[str]:
        return {self.session_of[sid] for sid, p in self.assignment.items() if p == partition}

    def shares(self) -> dict[str, float]:
        """各分区实际片段占比"""
        total = len(self.assignment)
        counts = {p: 0 for p in PARTITIONS}
        for partition in self.assignment.values():
            counts[partition] += 1
        return {p: counts[p] / total for p in PARTITIONS} if total else counts

    def is_test_disjoint(self) -> bool:
        """测试分区的会话不出现在训练或开发分区"""
        test = self.sessions_in("test")
        return not (test & (self.sessions_in("train") | self.sessions_in("dev")))


def split_partitions(
    segments: list[Segment],
    ratios: tuple[float, float, float] = (0.56, 0.23, 0.21),
    seed: int = 0,
) -> PartitionSplit:
    """
    按会话贪心划分 train/dev/test

    Args:
        segments: 全部片段
        ratios: 三个分区的目标比例（之和为 1）
        seed: 洗牌种子

    Returns:
        PartitionSplit
    """
    if any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"分区比例必须为正且之和为 1: {ratios}")

    by_session: dict[str, list[str]] = defaultdict(list)
    for segment in segments:
        by_session[segment.session_id].append(segment.segment_id)

    # 排序后再洗牌，结果与输入顺序无关
    order = sorted(by_session)
    if len(order) < len(PARTITIONS):
        raise TooFewSessions(f"至少需要 3 个含片段的会话，当前只有 {len(order)} 个")
    random.Random(seed).shuffle(order)

    total = len(segments)
    targets = [r * total for r in ratios]
    counts = [0, 0, 0]
    part = 0
    assignment: dict[str, Partition] = {}
    session_of: dict[str, str] = {}

    for i, session_id in enumerate(order):
        remaining = len(order) - i
        if part < 2 and counts[part] > 0:
            reached = counts[part] >= targets[part] - 1e-9
            # 为后面的分区各留至少一个会话
            must_leave = remaining <= len(PARTITIONS) - 1 - part
            if reached or must_leave:
                part += 1
        for segment_id in by_session[session_id]:
            assignment[segment_id] = PARTITIONS[part]
            session_of[segment_id] = session_id
        counts[part] += len(by_session[session_id])

    split = PartitionSplit(assignment=assignment, session_of=session_of, seed=seed)
    shares = split.shares()
    logger.info(
        "分区完成: " + ", ".join(f"{p}={counts[i]} ({shares[p]:.1%})" for i, p in enumerate(PARTITIONS))
    )
    return split


def write_partition(path: str | Path, split: PartitionSplit) -> None:
    """写出分区表"""
    rows = [
        {"segment_id": sid, "session_id": split.session_of[sid], "partition": partition}
        for sid, partition in split.assignment.items()
    ]
    write_table(path, rows, PARTITION_COLUMNS)


def read_partition(path: str | Path) -> PartitionSplit:
    """读取分区表"""
    frame = read_table(path, PARTITION_COLUMNS)
    for index, value in frame["partition"].items():
        if value not in PARTITIONS:
            raise ParseError(f"未知分区 {value!r}", path=str(path),
                             line=line_of(index), field="partition")
    assignment = dict(zip(frame["segment_id"], frame["partition"]))
    session_of = dict(zip(frame["segment_id"], frame["session_id"]))
    return PartitionSplit(assignment=assignment, session_of=session_of)


def label_histogram(split: PartitionSplit, segments: list[Segment]) -> dict[str, list[int]]:
    """
    各分区的 RPE 标签直方图

    Args:
        split: 分区结果
        segments: 片段（不在分区表中的片段忽略）

    Returns:
        分区名到 RPE 6..20 计数列表的映射
    """
    counts = {p: [0] * (RPE_MAX - RPE_MIN + 1) for p in PARTITIONS}
    for segment in segments:
        partition = split.assignment.get(segment.segment_id)
        if partition is not None:
            counts[partition][segment.fatigue - RPE_MIN] += 1
    return counts


def write_label_histogram(path: str | Path, histogram: dict[str, list[int]]) -> None:
    """写出每个 RPE 值一行、每个分区一列的直方图表"""
    rows = [
        {"rpe": rpe, **{p: histogram[p][rpe - RPE_MIN] for p in PARTITIONS}}
        for rpe in range(RPE_MIN, RPE_MAX + 1)
    ]
    write_table(path, rows, HISTOGRAM_COLUMNS)
