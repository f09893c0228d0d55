"""
片段切分节点

读取语料清单与每个会话 WAV 的时长，切出以回答为中心的片段表。
"""

import logging
from pathlib import Path

from audio.wav import probe_wav
from config_loader import Config
from dataset.manifest import load_manifest
from dataset.segments import segment_session, write_segments
from errors import SampleRateMismatch
from nodes.base import stage_node
from state import PipelineState
from utils.run_manifest import start_run_manifest


logger = logging.getLogger(__name__)


@stage_node("segment")
def segment_node(state: PipelineState, config: Config) -> None:
    """生成片段表"""
    corpus_dir = Path(state["corpus_dir"])
    segments_path = Path(state["segments_path"])
    run = start_run_manifest(
        "segment",
        segments_path.parent,
        config.snapshot(),
        inputs={"corpus": corpus_dir},
        outputs={"segments": segments_path},
    )

    sessions, _ = load_manifest(corpus_dir)
    segments = []
    for session in sessions:
        info = probe_wav(corpus_dir / session.audio_path)
        if info.sample_rate != config.audio.sample_rate:
            raise SampleRateMismatch(found=info.sample_rate, expected=config.audio.sample_rate)
        segments.extend(segment_session(session, info.duration_s, config.dataset.half_window_s))

    write_segments(segments_path, segments)
    logger.info(f"切分完成: {len(sessions)} 个会话 → {len(segments)} 个片段")
    run.finish(segments=len(segments))
