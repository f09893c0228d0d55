"""
分区节点
"""

import logging
from pathlib import Path

from config_loader import Config
from dataset.segments import read_segments
from dataset.split import label_histogram, split_partitions, write_label_histogram, write_partition
from nodes.base import stage_node
from state import PipelineState
from utils.run_manifest import start_run_manifest


logger = logging.getLogger(__name__)

HISTOGRAM_FILE = "rpe_histogram.csv"


@stage_node("split")
def split_node(state: PipelineState, config: Config) -> None:
    """按会话划分 train/dev/test，并写出各分区的 RPE 直方图"""
    partition_path = Path(state["partition_path"])
    histogram_path = partition_path.parent / HISTOGRAM_FILE
    run = start_run_manifest(
        "split",
        partition_path.parent,
        config.snapshot(),
        seeds={"split": config.dataset.split_seed},
        inputs={"segments": state["segments_path"]},
        outputs={"partition": partition_path, "histogram": histogram_path},
    )
    segments = read_segments(state["segments_path"], config.dataset.segment_seconds)
    split = split_partitions(segments, config.dataset.ratios, config.dataset.split_seed)
    write_partition(partition_path, split)
    histogram = label_histogram(split, segments)
    write_label_histogram(histogram_path, histogram)
    run.finish(
        **{f"share_{p}": round(v, 4) for p, v in split.shares().items()},
        rpe_histogram=histogram,
    )
