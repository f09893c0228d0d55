"""
特征提取节点
"""

import logging
from pathlib import Path

from config_loader import Config
from dataset.manifest import load_manifest
from dataset.segments import read_segments, write_segments
from features.corpus import featurize_segments
from nodes.base import stage_node
from state import PipelineState
from utils.run_manifest import start_run_manifest


logger = logging.getLogger(__name__)


@stage_node("featurize")
def featurize_node(state: PipelineState, config: Config) -> None:
    """为片段表中的每个片段计算 log-Mel 缓存，并写出带特征路径的片段表"""
    features_dir = Path(state["features_dir"])
    run = start_run_manifest(
        "featurize",
        features_dir,
        config.snapshot(),
        inputs={"corpus": state["corpus_dir"], "segments": state["segments_path"]},
        outputs={"segments": state["featurized_path"]},
    )

    segments = read_segments(state["segments_path"], config.dataset.segment_seconds)
    sessions, _ = load_manifest(state["corpus_dir"])
    featurized = featurize_segments(
        segments,
        sessions,
        state["corpus_dir"],
        features_dir,
        config.stft,
        config.mel,
        crop_seconds=config.dataset.crop_seconds,
        workers=config.runtime.threads,
    )
    write_segments(state["featurized_path"], featurized)
    run.finish(segments=len(featurized))
