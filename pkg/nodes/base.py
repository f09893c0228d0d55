"""
阶段节点的公共包装

每个节点都是 ``xxx_node(state, config) -> state``：
出错时不抛异常，而是把 status 置为 error 并记录错误类别与退出码，由工作流路由到 END。
未预期的异常统一记为 InternalError（退出码 1）。
"""

import functools
import logging
import time
from typing import Callable

from config_loader import Config
from errors import InternalError, StrideSenseError
from state import PipelineState


logger = logging.getLogger(__name__)

StageBody = Callable[[PipelineState, Config], None]


def mark_error(state: PipelineState, error: StrideSenseError | OSError) -> PipelineState:
    """把异常写入状态（OSError 记为 IoError）"""
    state["status"] = "error"
    state["error"] = str(error)
    if isinstance(error, StrideSenseError):
        state["error_kind"] = error.kind
        state["exit_code"] = error.exit_code
    else:
        state["error_kind"] = "IoError"
        state["exit_code"] = 1
    return state


def stage_node(stage: str) -> Callable[[StageBody], Callable[[PipelineState, Config], PipelineState]]:
    """
    把阶段函数包装为流水线节点

    Args:
        stage: 阶段名

    Returns:
        装饰器
    """
    def decorator(body: StageBody) -> Callable[[PipelineState, Config], PipelineState]:
        @functools.wraps(body)
        def node(state: PipelineState, config: Config) -> PipelineState:
            state["stage"] = stage
            state["status"] = "running"
            logger.info(f"阶段 {stage} 开始")
            t0 = time.perf_counter()
            try:
                body(state, config)
            except (StrideSenseError, OSError) as e:
                logger.error(f"阶段 {stage} 失败: {e}")
                return mark_error(state, e)
            except Exception as e:
                logger.exception(f"阶段 {stage} 出现未预期的错误")
                return mark_error(state, InternalError(f"{type(e).__name__}: {e}"))
            state["timings"] = {**state.get("timings", {}), stage: round(time.perf_counter() - t0, 3)}
            state["status"] = "completed"
            return state
        return node
    return decorator
