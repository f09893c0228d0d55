"""
评估报告

对一个分区逐片段预测，计算整体 MAE/CCC、按 年龄段×性别 分层的 MAE，
以及按跑者排序的 MAE，并写出表格、绘图数据与摘要。
"""

import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from dataset.tables import read_table, write_table
from dataset.types import AGE_RANGES, RPE_MAX, RPE_MIN, SEXES, RunnerProfile, Segment
from errors import ArtifactIOError, EmptyInput, LengthMismatch, UnknownRunner
from evaluation.metrics import ccc_or_none, mae
from model.cnn14 import Cnn14Regressor
from model.inference import predict_segments


logger = logging.getLogger(__name__)

UNDEFINED = "undefined"

PAIRS_FILE = "pairs.csv"
STRATA_FILE = "strata.csv"
PER_RUNNER_FILE = "per_runner.csv"
STRATA_PLOT_FILE = "strata_plot.dat"
RUNNER_PLOT_FILE = "per_runner_plot.dat"
SUMMARY_FILE = "summary.json"
COMPARISON_STRATA_FILE = "comparison_strata.csv"
COMPARISON_RUNNER_FILE = "comparison_per_runner.csv"
COMPARISON_STRATA_PLOT_FILE = "comparison_strata_plot.dat"
COMPARISON_RUNNER_PLOT_FILE = "comparison_per_runner_plot.dat"
COMPARISON_SUMMARY_FILE = "comparison.json"


@dataclass(frozen=True)
class PredictionPair:
    segment_id: str
    runner_id: str
    prediction: float
    target: float


@dataclass(frozen=True)
class StratumResult:
    mae: float
    count: int


@dataclass(frozen=True)
class RunnerResult:
    runner_id: str
    mae: float
    count: int


@dataclass
class EvalReport:
    """评估报告（pairs 按 segment_id 排序）"""
    pairs: list[PredictionPair]
    global_mae: float
    global_ccc: Optional[float]
    strata: dict[tuple[str, str], StratumResult] = field(default_factory=dict)
    per_runner: list[RunnerResult] = field(default_factory=list)
    baseline_prediction: Optional[float] = None   # 常数预测器的取值（训练分区标签均值）
    baseline_mae: Optional[float] = None

    @property
    def mae_to_baseline(self) -> Optional[float]:
        if not self.baseline_mae:
            return None
        return self.global_mae / self.baseline_mae

    @property
    def count(self) -> int:
        return len(self.pairs)

    def predictions(self) -> np.ndarray:
        return np.array([p.prediction for p in self.pairs], dtype=np.float64)

    def targets(self) -> np.ndarray:
        return np.array([p.target for p in self.pairs], dtype=np.float64)


def train_mean_baseline(train_segments: list[Segment]) -> float:
    """常数基线：训练分区 RPE 标签的均值"""
    if not train_segments:
        raise EmptyInput("训练分区为空，无法计算基线")
    return float(np.mean([s.fatigue for s in train_segments]))


def build_report(pairs: list[PredictionPair],
                 profiles: Optional[list[RunnerProfile]] = None,
                 baseline_prediction: Optional[float] = None) -> EvalReport:
    """由预测对构建报告（整体指标、分层、按跑者排名，以及可选的常数基线 MAE）"""
    if not pairs:
        raise EmptyInput("评估分区为空")
    pairs = sorted(pairs, key=lambda p: p.segment_id)
    preds = np.array([p.prediction for p in pairs], dtype=np.float64)
    targets = np.array([p.target for p in pairs], dtype=np.float64)
    report = EvalReport(pairs=pairs, global_mae=mae(preds, targets),
                        global_ccc=ccc_or_none(preds, targets))
    report.per_runner = per_runner(report)
    if profiles is not None:
        report.strata = stratify(report, profiles)
    if baseline_prediction is not None:
        report.baseline_prediction = float(baseline_prediction)
        report.baseline_mae = mae(np.full_like(targets, baseline_prediction), targets)
    return report


def evaluate(
    model: Cnn14Regressor,
    segments: list[Segment],
    profiles: Optional[list[RunnerProfile]] = None,
    batch_size: int = 24,
    workers: int = 1,
    baseline_prediction: Optional[float] = None,
) -> EvalReport:
    """
    在推理模式下评估一个分区

    片段先按 segment_id 排序再按固定大小分批，结果与输入顺序和线程数无关。

    Args:
        model: 模型
        segments: 分区片段（需已有特征缓存）
        profiles: 跑者档案（提供时计算分层结果）
        batch_size: 推理批大小
        workers: 线程数
        baseline_prediction: 常数基线的取值（通常为训练分区标签均值）

    Returns:
        EvalReport
    """
    ordered = sorted(segments, key=lambda s: s.segment_id)
    preds = predict_segments(model, ordered, batch_size, workers)
    pairs = [
        PredictionPair(s.segment_id, s.runner_id, float(p), float(s.fatigue))
        for s, p in zip(ordered, preds)
    ]
    report = build_report(pairs, profiles, baseline_prediction)
    ccc_text = UNDEFINED if report.global_ccc is None else f"{report.global_ccc:.4f}"
    logger.info(f"评估完成: {report.count} 个片段, MAE={report.global_mae:.3f}, CCC={ccc_text}")
    return report


def stratify(report: EvalReport,
             profiles: list[RunnerProfile]) -> dict[tuple[str, str], StratumResult]:
    """
    按 (年龄段, 性别) 分层计算 MAE，空单元格省略

    Raises:
        UnknownRunner: 报告中的跑者没有档案
    """
    profile_of = {p.runner_id: p for p in profiles}
    errors: dict[tuple[str, str], list[float]] = defaultdict(list)
    for pair in report.pairs:
        profile = profile_of.get(pair.runner_id)
        if profile is None:
            raise UnknownRunner(f"跑者 {pair.runner_id} 没有档案")
        errors[(profile.age_range, profile.sex)].append(abs(pair.prediction - pair.target))

    strata = {}
    for age_range in AGE_RANGES:
        for sex in SEXES:
            cell = errors.get((age_range, sex))
            if cell:
                strata[(age_range, sex)] = StratumResult(mae=float(np.mean(cell)), count=len(cell))
    return strata


def per_runner(report: EvalReport) -> list[RunnerResult]:
    """按跑者计算 MAE，升序排列，并列按跑者编号"""
    if not report.pairs:
        raise EmptyInput("报告为空")
    errors: dict[str, list[float]] = defaultdict(list)
    for pair in report.pairs:
        errors[pair.runner_id].append(abs(pair.prediction - pair.target))
    results = [RunnerResult(rid, float(np.mean(v)), len(v)) for rid, v in errors.items()]
    return sorted(results, key=lambda r: (r.mae, r.runner_id))


def _or_undefined(value: Optional[float]):
    return UNDEFINED if value is None else value


def _write_plot(path: Path, rows: list[tuple[float, float]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for x, y in rows:
            f.write(f"{x!r} {y!r}\n")


def emit_report(report: EvalReport, out_dir: str | Path, clip_predictions: bool = False) -> dict[str, Path]:
    """
    写出报告文件

    Args:
        report: 评估报告
        out_dir: 输出目录
        clip_predictions: 是否在 pairs 表中附加裁剪到 [6, 20] 的预测列

    Returns:
        文件名到路径的映射
    """
    out_dir = Path(out_dir)
    paths = {
        "pairs": out_dir / PAIRS_FILE,
        "strata": out_dir / STRATA_FILE,
        "per_runner": out_dir / PER_RUNNER_FILE,
        "strata_plot": out_dir / STRATA_PLOT_FILE,
        "per_runner_plot": out_dir / RUNNER_PLOT_FILE,
        "summary": out_dir / SUMMARY_FILE,
    }

    pair_columns = ["segment_id", "runner_id", "prediction", "target"]
    if clip_predictions:
        pair_columns.append("prediction_clipped")
    pair_rows = []
    for p in report.pairs:
        row = {"segment_id": p.segment_id, "runner_id": p.runner_id,
               "prediction": repr(p.prediction), "target": repr(p.target)}
        if clip_predictions:
            row["prediction_clipped"] = repr(float(np.clip(p.prediction, RPE_MIN, RPE_MAX)))
        pair_rows.append(row)
    write_table(paths["pairs"], pair_rows, pair_columns)

    write_table(
        paths["strata"],
        [{"age_range": a, "sex": s, "mae": repr(r.mae), "count": r.count}
         for (a, s), r in report.strata.items()],
        ["age_range", "sex", "mae", "count"],
    )
    write_table(
        paths["per_runner"],
        [{"runner_id": r.runner_id, "mae": repr(r.mae), "count": r.count} for r in report.per_runner],
        ["runner_id", "mae", "count"],
    )

    cells = [(a, s) for a in AGE_RANGES for s in SEXES]
    try:
        _write_plot(paths["strata_plot"],
                    [(float(cells.index(key)), r.mae) for key, r in report.strata.items()])
        _write_plot(paths["per_runner_plot"],
                    [(float(rank), r.mae) for rank, r in enumerate(report.per_runner, start=1)])

        summary = {
            "count": report.count,
            "global_mae": report.global_mae,
            "global_ccc": _or_undefined(report.global_ccc),
            "strata": [
                {"age_range": a, "sex": s, "mae": r.mae, "count": r.count}
                for (a, s), r in report.strata.items()
            ],
            "per_runner": [
                {"runner_id": r.runner_id, "mae": r.mae, "count": r.count} for r in report.per_runner
            ],
            "baseline_prediction": _or_undefined(report.baseline_prediction),
            "baseline_mae": _or_undefined(report.baseline_mae),
            "mae_to_baseline": _or_undefined(report.mae_to_baseline),
            "clip_predictions": clip_predictions,
        }
        with open(paths["summary"], "w", encoding="utf-8") as f:
            json.dump(summary, f, ensure_ascii=False, indent=2)
    except OSError as e:
        raise ArtifactIOError(f"写出评估报告失败: {out_dir}: {e}") from e

    logger.info(f"评估报告已写出: {out_dir}")
    return paths


def read_pairs(path: str | Path) -> list[PredictionPair]:
    """读回 pairs 表"""
    frame = read_table(path, ["segment_id", "runner_id", "prediction", "target"])
    return [
        PredictionPair(row["segment_id"], row["runner_id"], float(row["prediction"]), float(row["target"]))
        for _, row in frame.iterrows()
    ]


def _plot_value(result) -> str:
    return "nan" if result is None else repr(result.mae)


def emit_comparison(reports: dict[str, EvalReport], out_dir: str | Path) -> dict[str, Path]:
    """
    把同一分区上多个模型的报告并排写出

    分层表与按跑者表沿用单模型报告的列，并在最前面加 model 列；
    按跑者的行顺序取第一个模型的排名。绘图数据每行为 x 与各模型的 MAE（缺失写 nan）。

    Args:
        reports: 模型标签到报告的映射（按插入顺序输出）
        out_dir: 输出目录

    Returns:
        文件名到路径的映射

    Raises:
        LengthMismatch: 各报告覆盖的片段不一致
    """
    if not reports:
        raise EmptyInput("没有可对比的报告")
    labels = list(reports)
    reference = reports[labels[0]]
    segment_ids = [p.segment_id for p in reference.pairs]
    for label in labels[1:]:
        if [p.segment_id for p in reports[label].pairs] != segment_ids:
            raise LengthMismatch(f"模型 {label} 与 {labels[0]} 评估的片段不一致")

    out_dir = Path(out_dir)
    paths = {
        "strata": out_dir / COMPARISON_STRATA_FILE,
        "per_runner": out_dir / COMPARISON_RUNNER_FILE,
        "strata_plot": out_dir / COMPARISON_STRATA_PLOT_FILE,
        "per_runner_plot": out_dir / COMPARISON_RUNNER_PLOT_FILE,
        "summary": out_dir / COMPARISON_SUMMARY_FILE,
    }

    cells = [(a, s) for a in AGE_RANGES for s in SEXES if (a, s) in reference.strata]
    strata_rows = []
    for age_range, sex in cells:
        for label in labels:
            result = reports[label].strata[(age_range, sex)]
            strata_rows.append({"model": label, "age_range": age_range, "sex": sex,
                                "mae": repr(result.mae), "count": result.count})
    write_table(paths["strata"], strata_rows, ["model", "age_range", "sex", "mae", "count"])

    runner_results = {label: {r.runner_id: r for r in reports[label].per_runner} for label in labels}
    ranking = [r.runner_id for r in reference.per_runner]
    runner_rows = []
    for runner_id in ranking:
        for label in labels:
            result = runner_results[label][runner_id]
            runner_rows.append({"model": label, "runner_id": runner_id,
                                "mae": repr(result.mae), "count": result.count})
    write_table(paths["per_runner"], runner_rows, ["model", "runner_id", "mae", "count"])

    all_cells = [(a, s) for a in AGE_RANGES for s in SEXES]
    try:
        with open(paths["strata_plot"], "w", encoding="utf-8", newline="\n") as f:
            for key in cells:
                values = " ".join(_plot_value(reports[label].strata.get(key)) for label in labels)
                f.write(f"{float(all_cells.index(key))!r} {values}\n")
        with open(paths["per_runner_plot"], "w", encoding="utf-8", newline="\n") as f:
            for rank, runner_id in enumerate(ranking, start=1):
                values = " ".join(_plot_value(runner_results[label].get(runner_id)) for label in labels)
                f.write(f"{float(rank)!r} {values}\n")

        summary = {
            "models": labels,
            "count": reference.count,
            "global": {
                label: {
                    "mae": reports[label].global_mae,
                    "ccc": _or_undefined(reports[label].global_ccc),
                    "mae_to_baseline": _or_undefined(reports[label].mae_to_baseline),
                }
                for label in labels
            },
            "baseline_mae": _or_undefined(reference.baseline_mae),
        }
        with open(paths["summary"], "w", encoding="utf-8") as f:
            json.dump(summary, f, ensure_ascii=False, indent=2)
    except OSError as e:
        raise ArtifactIOError(f"写出对比报告失败: {out_dir}: {e}") from e

    logger.info(f"对比报告已写出: {', '.join(labels)} → {out_dir}")
    return paths
