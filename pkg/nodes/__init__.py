"""
StrideSense 流水线节点模块
"""

from nodes.synth_node import synth_node
from nodes.segment_node import segment_node
from nodes.featurize_node import featurize_node
from nodes.split_node import split_node
from nodes.train_node import train_node
from nodes.evaluate_node import evaluate_node

__all__ = [
    "synth_node",
    "segment_node",
    "featurize_node",
    "split_node",
    "train_node",
    "evaluate_node",
]
