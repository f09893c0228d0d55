"""
LangGraph 流水线定义

定义 StrideSense 从合成语料到评估报告的完整流水线
"""

import logging
from typing import Literal, Optional

from langgraph.graph import END, StateGraph

from config_loader import Config, setup_logging
from nodes.evaluate_node import evaluate_node
from nodes.featurize_node import featurize_node
from nodes.segment_node import segment_node
from nodes.split_node import split_node
from nodes.synth_node import synth_node
from nodes.train_node import train_node
from state import STAGES, PipelineState, create_initial_state


logger = logging.getLogger(__name__)

NODES = {
    "synth": synth_node,
    "segment": segment_node,
    "featurize": featurize_node,
    "split": split_node,
    "train": train_node,
    "evaluate": evaluate_node,
}


class StrideSensePipeline:
    """
    StrideSense LangGraph 流水线

    工作流程：
    1. synth: 生成合成语料（可跳过，直接使用已有语料）
    2. segment: 切分以回答为中心的片段
    3. featurize: 计算 log-Mel 特征缓存
    4. split: 按会话划分 train/dev/test
    5. train: 训练并按选模指标（默认 dev CCC）选模
    6. evaluate: 评估并写出报告
    任一阶段出错即结束。
    """

    def __init__(self, config: Config, stages: Optional[tuple[str, ...]] = None):
        """
        初始化流水线

        Args:
            config: 配置对象
            stages: 要执行的阶段（按固定顺序，默认全部）
        """
        self.config = config
        self.stages = tuple(s for s in STAGES if s in (stages or STAGES))
        self.graph = self._build_graph()

    def _build_graph(self):
        """
        构建 LangGraph 流水线图

        Returns:
            编译后的流水线图
        """
        workflow = StateGraph(PipelineState)

        for stage in self.stages:
            workflow.add_node(stage, self._wrap_node(NODES[stage]))

        workflow.set_entry_point(self.stages[0])

        # 每个阶段之后检查错误，出错直接结束
        for current, following in zip(self.stages, self.stages[1:] + (END,)):
            workflow.add_conditional_edges(
                current,
                self._check_error,
                {
                    "continue": following,
                    "error": END,
                }
            )

        return workflow.compile()

    def _wrap_node(self, node_func):
        """
        包装节点函数，注入配置

        Args:
            node_func: 节点函数

        Returns:
            包装后的函数
        """
        def wrapped(state: PipelineState) -> PipelineState:
            return node_func(state, self.config)
        return wrapped

    def _check_error(self, state: PipelineState) -> Literal["continue", "error"]:
        """
        检查是否有错误

        Args:
            state: 当前状态

        Returns:
            路由决策
        """
        if state.get("status") == "error":
            logger.error(f"阶段 {state.get('stage')} 出错: {state.get('error')}")
            return "error"
        return "continue"

    def run(self, state: PipelineState) -> PipelineState:
        """
        运行流水线

        Args:
            state: 初始状态

        Returns:
            最终状态
        """
        logger.info(f"开始运行流水线: {' → '.join(self.stages)}")
        final_state = self.graph.invoke(state)

        if final_state.get("status") == "error":
            logger.error(f"❌ 流水线失败于 {final_state.get('stage')}: {final_state.get('error')}")
        else:
            final_state["status"] = "completed"
            logger.info("✅ 流水线完成")
            for stage, seconds in final_state.get("timings", {}).items():
                logger.info(f"   {stage}: {seconds:.1f}s")
        return final_state


def run_pipeline(
    work_dir: str,
    config_path: Optional[str] = None,
    stages: Optional[tuple[str, ...]] = None,
    **state_options,
) -> PipelineState:
    """
    便捷函数：加载配置、创建并运行流水线

    Args:
        work_dir: 工作目录
        config_path: 配置文件路径（可选）
        stages: 要执行的阶段
        **state_options: 传给 create_initial_state 的其他参数

    Returns:
        最终状态
    """
    config = Config.load(config_path)
    setup_logging(config.logging)
    pipeline = StrideSensePipeline(config, stages)
    return pipeline.run(create_initial_state(work_dir, **state_options))
