"""
StrideSense 数据集模块
"""

from dataset.types import (
    PARTITIONS,
    AnswerEvent,
    RunnerProfile,
    Segment,
    SessionManifest,
)
from dataset.manifest import load_manifest, write_manifest
from dataset.segments import read_segments, segment_session, write_segments
from dataset.split import (
    PartitionSplit,
    label_histogram,
    read_partition,
    split_partitions,
    write_label_histogram,
    write_partition,
)

__all__ = [
    "PARTITIONS",
    "AnswerEvent",
    "RunnerProfile",
    "Segment",
    "SessionManifest",
    "load_manifest",
    "write_manifest",
    "read_segments",
    "segment_session",
    "write_segments",
    "PartitionSplit",
    "label_histogram",
    "write_label_histogram",
    "read_partition",
    "split_partitions",
    "write_partition",
]
