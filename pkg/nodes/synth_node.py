"""
合成语料节点
"""

import logging

from config_loader import Config
from nodes.base import stage_node
from state import PipelineState
from synthdata.generator import generate_corpus
from utils.run_manifest import start_run_manifest


logger = logging.getLogger(__name__)


@stage_node("synth")
def synth_node(state: PipelineState, config: Config) -> None:
    """生成合成语料（WAV + 清单）到 corpus_dir"""
    run = start_run_manifest(
        "synth",
        state["corpus_dir"],
        config.snapshot(),
        seeds={"synth": config.synth.seed},
    )
    sessions, profiles = generate_corpus(
        config.synth, state["corpus_dir"], workers=config.runtime.threads
    )
    run.finish(sessions=len(sessions), runners=len(profiles))
