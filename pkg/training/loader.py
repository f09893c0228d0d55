"""
批数据预取

后台线程按给定顺序读取特征缓存并组批，经有界队列交给训练循环；
批的内容和顺序只由输入顺序决定。
"""

import logging
import queue
import threading
from dataclasses import dataclass

import numpy as np

from dataset.types import Segment
from model.inference import stack_batch


logger = logging.getLogger(__name__)

_DONE = object()


@dataclass
class Batch:
    """一个训练批"""
    features: np.ndarray
    targets: np.ndarray
    segment_ids: list[str]

    def __len__(self) -> int:
        return len(self.segment_ids)


def plan_batches(order: list[int], batch_size: int) -> list[list[int]]:
    """
    按顺序切分批次：最后一批不足 batch_size 时保留（≥2）或丢弃（=1）
    """
    batches = [order[i:i + batch_size] for i in range(0, len(order), batch_size)]
    if batches and len(batches[-1]) == 1:
        batches.pop()
    return batches


class BatchLoader:
    """
    有界队列的批预取器

    用法:
        for batch in BatchLoader(segments, batches, prefetch=2):
            ...
    """

    def __init__(self, segments: list[Segment], batches: list[list[int]], prefetch: int = 2):
        self.segments = segments
        self.batches = batches
        self.queue: queue.Queue = queue.Queue(maxsize=max(1, prefetch))
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._produce, name="batch-loader", daemon=True)

    def _produce(self) -> None:
        try:
            for indices in self.batches:
                if self._stop.is_set():
                    return
                chosen = [self.segments[i] for i in indices]
                batch = Batch(
                    features=stack_batch(chosen),
                    targets=np.array([s.fatigue for s in chosen], dtype=np.float64),
                    segment_ids=[s.segment_id for s in chosen],
                )
                self._put(batch)
        except Exception as e:
            self._put(e)
            return
        self._put(_DONE)

    def _put(self, item) -> None:
        while not self._stop.is_set():
            try:
                self.queue.put(item, timeout=0.1)
                return
            except queue.Full:
                continue

    def __iter__(self):
        self._thread.start()
        try:
            while True:
                item = self.queue.get()
                if item is _DONE:
                    return
                if isinstance(item, Exception):
                    raise item
                yield item
        finally:
            self._stop.set()
            self._thread.join(timeout=5)
