"""
StrideSense 工具函数模块
"""

from utils.parallel import map_ordered
from utils.run_manifest import RunManifest, start_run_manifest

__all__ = [
    "map_ordered",
    "RunManifest",
    "start_run_manifest",
]
