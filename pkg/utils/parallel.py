"""
有界线程池

numpy 的 FFT 与矩阵运算会释放 GIL，线程池足以并行处理片段。
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar


T = TypeVar("T")
R = TypeVar("R")


def map_ordered(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> list[R]:
    """
    在有界线程池上执行 fn，结果保持输入顺序

    Args:
        fn: 处理单个元素的函数（不得共享可变状态）
        items: 输入元素
        workers: 最大线程数

    Returns:
        结果列表
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
