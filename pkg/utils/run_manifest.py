"""
运行清单

每个阶段在改动输出目录之前写出一份运行清单（配置快照、种子、版本、输入输出路径），
阶段结束后补写耗时。
"""

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Optional

from errors import ArtifactIOError


logger = logging.getLogger(__name__)

TOOL_NAME = "stridesense"
TOOL_VERSION = "0.1.0"


@dataclass
class RunManifest:
    """一次阶段运行的记录"""
    stage: str
    config: dict
    seeds: dict
    inputs: dict
    outputs: dict
    tool: str = TOOL_NAME
    version: str = TOOL_VERSION
    started_at: str = ""
    finished_at: Optional[str] = None
    timings: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)
    _t0: float = field(default=0.0, repr=False)

    @property
    def path(self) -> Path:
        return Path(self.outputs["dir"]) / f"run_manifest_{self.stage}.json"

    def to_dict(self) -> dict:
        data = asdict(self)
        data.pop("_t0")
        return data

    def write(self) -> None:
        """写出清单文件"""
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "w", encoding="utf-8") as f:
                json.dump(self.to_dict(), f, ensure_ascii=False, indent=2)
        except OSError as e:
            raise ArtifactIOError(f"写出运行清单失败: {self.path}: {e}") from e

    def finish(self, **stats) -> None:
        """记录结束时间、耗时与阶段统计并重写清单"""
        self.finished_at = datetime.now().isoformat()
        self.timings = {"wall_seconds": round(time.perf_counter() - self._t0, 3)}
        self.stats = stats
        self.write()
        logger.info(f"阶段 {self.stage} 完成，耗时 {self.timings['wall_seconds']:.1f}s")


def start_run_manifest(
    stage: str,
    output_dir: str | Path,
    config: dict,
    seeds: Optional[dict] = None,
    inputs: Optional[dict] = None,
    outputs: Optional[dict] = None,
) -> RunManifest:
    """
    创建并立即写出运行清单

    Args:
        stage: 阶段名
        output_dir: 阶段输出目录
        config: 解析后的配置快照
        seeds: 使用的随机种子
        inputs: 输入路径
        outputs: 输出路径

    Returns:
        RunManifest
    """
    manifest = RunManifest(
        stage=stage,
        config=config,
        seeds=seeds or {},
        inputs={k: str(v) for k, v in (inputs or {}).items()},
        outputs={"dir": str(output_dir), **{k: str(v) for k, v in (outputs or {}).items()}},
        started_at=datetime.now().isoformat(),
        _t0=time.perf_counter(),
    )
    manifest.write()
    return manifest
