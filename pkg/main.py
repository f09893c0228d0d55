"""
StrideSense 主入口

命令行接口和主程序入口
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional

from pydantic import ValidationError
from rich.console import Console
from rich.panel import Panel
from rich.progress import Progress, SpinnerColumn, TextColumn

from config_loader import Config, setup_logging
from errors import UsageError
from pipeline_workflow import StrideSensePipeline
from state import STAGES, PipelineState, create_initial_state


console = Console(stderr=True)
logger = logging.getLogger(__name__)

# 命令行参数 → 配置字段
OVERRIDES: dict[str, tuple[str, str]] = {
    "threads": ("runtime", "threads"),
    "runners": ("synth", "n_runners"),
    "synth_seed": ("synth", "seed"),
    "session_duration": ("synth", "session_duration_s"),
    "half_window": ("dataset", "half_window_s"),
    "crop_seconds": ("dataset", "crop_seconds"),
    "ratios": ("dataset", "ratios"),
    "split_seed": ("dataset", "split_seed"),
    "epochs": ("training", "epochs"),
    "batch_size": ("training", "batch_size"),
    "learning_rate": ("training", "learning_rate"),
    "shuffle_seed": ("training", "shuffle_seed"),
    "init_seed": ("training", "init_seed"),
    "width_scale": ("model", "width_scale"),
    "clip_predictions": ("evaluation", "clip_predictions"),
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-c", "--config", type=str, default=None,
                        help="配置文件路径（默认使用内置配置）")
    parser.add_argument("-w", "--work-dir", type=str, default="stridesense_run",
                        help="工作目录（各阶段产物的根目录）")
    parser.add_argument("--corpus-dir", type=str, default=None,
                        help="语料目录（默认 <work-dir>/corpus）")
    parser.add_argument("-t", "--threads", type=int, default=None,
                        help="工作线程数（覆盖 STRIDESENSE_THREADS）")
    parser.add_argument("-v", "--verbose", action="store_true", help="显示详细日志")


def _add_synth(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--runners", type=int, default=None, help="跑者人数")
    parser.add_argument("--synth-seed", type=int, default=None, help="合成语料主种子")
    parser.add_argument("--session-duration", type=float, default=None, help="会话时长（秒）")


def _add_segment(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--half-window", type=float, default=None, help="回答前后各取的秒数")


def _add_featurize(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--crop-seconds", type=float, default=None, help="片段中央裁剪时长（秒）")


def _add_split(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--ratios", type=float, nargs=3, default=None,
                        metavar=("TRAIN", "DEV", "TEST"), help="分区比例")
    parser.add_argument("--split-seed", type=int, default=None, help="会话洗牌种子")


def _add_train(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--epochs", type=int, default=None, help="训练轮数")
    parser.add_argument("--batch-size", type=int, default=None, help="批大小")
    parser.add_argument("--learning-rate", type=float, default=None, help="学习率")
    parser.add_argument("--shuffle-seed", type=int, default=None, help="洗牌种子")
    parser.add_argument("--init-seed", type=int, default=None, help="初始化种子")
    parser.add_argument("--width-scale", type=float, default=None, help="通道宽度缩放因子")
    parser.add_argument("--init", choices=["random", "checkpoint"], default="random",
                        help="随机初始化或从预训练检查点替换输出层")
    parser.add_argument("--init-checkpoint", type=str, default=None, help="预训练检查点路径")


def _add_evaluate(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--partition", choices=["train", "dev", "test"], default="test",
                        help="评估分区")
    parser.add_argument("--clip-predictions", action="store_true", default=None,
                        help="在 pairs 表中附加裁剪到 [6, 20] 的预测列")
    parser.add_argument("--compare", action="append", default=None, metavar="LABEL=PATH",
                        help="与主检查点并排评估的检查点（可重复）")


STAGE_FLAGS = {
    "synth": [_add_synth],
    "segment": [_add_segment],
    "featurize": [_add_featurize],
    "split": [_add_split],
    "train": [_add_train],
    "evaluate": [_add_evaluate],
    "run": [_add_synth, _add_segment, _add_featurize, _add_split, _add_train, _add_evaluate],
}

STAGE_HELP = {
    "synth": "生成合成语料",
    "segment": "切分以回答为中心的片段",
    "featurize": "计算 log-Mel 特征缓存",
    "split": "按会话划分 train/dev/test",
    "train": "训练 CNN14 回归模型",
    "evaluate": "评估并写出报告",
    "run": "依次执行全部阶段",
}


def build_parser() -> argparse.ArgumentParser:
    """构建命令行解析器"""
    parser = argparse.ArgumentParser(
        prog="stridesense",
        description="StrideSense - 基于跑步音频的疲劳度 (Borg RPE) 预测工具",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
示例:
  # 生成 4 名跑者的合成语料并跑完整条流水线
  python main.py run -w ./out --runners 4 --epochs 5 --width-scale 0.125 --crop-seconds 10

  # 单独执行某个阶段
  python main.py split -w ./out --ratios 0.6 0.2 0.2

  # 从预训练检查点替换输出层后训练
  python main.py train -w ./out --init checkpoint --init-checkpoint pretrained.ckpt

  # 随机初始化与预训练两组检查点并排评估
  python main.py evaluate -w ./out --compare cnn14-pretrained=./pretrained_run/train/best.ckpt
        """
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, adders in STAGE_FLAGS.items():
        sub = subparsers.add_parser(name, help=STAGE_HELP[name])
        _add_common(sub)
        for add in adders:
            add(sub)
    return parser


def resolve_config(args: argparse.Namespace) -> Config:
    """
    加载配置并应用命令行覆盖（覆盖后重新校验）

    Args:
        args: 解析后的命令行参数

    Returns:
        配置对象
    """
    config_path = args.config
    if config_path is None:
        default_config = Path(__file__).parent / "config.yaml"
        if default_config.exists():
            config_path = str(default_config)

    data = Config.load(config_path).model_dump()
    for flag, (section, key) in OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is not None:
            data[section][key] = tuple(value) if isinstance(value, list) else value
    config = Config(**data)
    if args.verbose:
        config.logging.level = "DEBUG"
    return config


def parse_compare(values: Optional[list[str]]) -> dict[str, str]:
    """
    解析 --compare LABEL=PATH

    Raises:
        UsageError: 格式错误或标签重复
    """
    compare: dict[str, str] = {}
    for value in values or []:
        label, sep, path = value.partition("=")
        if not sep or not label or not path:
            raise UsageError(f"--compare 需要 LABEL=PATH 格式: {value!r}")
        if label in compare:
            raise UsageError(f"--compare 标签重复: {label}")
        compare[label] = path
    return compare


def build_state(args: argparse.Namespace) -> PipelineState:
    return create_initial_state(
        args.work_dir,
        corpus_dir=args.corpus_dir,
        init=getattr(args, "init", "random"),
        init_checkpoint=getattr(args, "init_checkpoint", None),
        eval_partition=getattr(args, "partition", "test"),
        compare_checkpoints=parse_compare(getattr(args, "compare", None)),
    )


def error_line(stage: str, kind: str, message: str) -> str:
    """单行结构化错误（写到 stderr）"""
    return json.dumps({"stage": stage, "error": kind, "message": message}, ensure_ascii=False)


def main(argv: Optional[list[str]] = None) -> int:
    """主函数，返回进程退出码"""
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        config = resolve_config(args)
        state = build_state(args)
    except ValidationError as e:
        print(error_line(args.command, "UsageError", str(e)), file=sys.stderr)
        return 2
    except UsageError as e:
        print(error_line(args.command, e.kind, str(e)), file=sys.stderr)
        return e.exit_code

    setup_logging(config.logging)
    stages = STAGES if args.command == "run" else (args.command,)

    console.print(Panel.fit(
        "[bold blue]StrideSense[/bold blue]\n"
        "[dim]跑步音频疲劳度预测[/dim]",
        border_style="blue"
    ))
    console.print(f"[bold]阶段:[/bold] {' → '.join(stages)}")
    console.print(f"[bold]工作目录:[/bold] {Path(args.work_dir).resolve()}")
    console.print(f"[bold]线程数:[/bold] {config.runtime.threads}\n")

    try:
        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            console=console,
        ) as progress:
            task = progress.add_task("[cyan]正在处理...", total=None)
            final_state = StrideSensePipeline(config, stages).run(state)
            progress.update(task, completed=True)
    except KeyboardInterrupt:
        console.print("\n[yellow]用户中断[/yellow]")
        return 130

    if final_state.get("status") == "error":
        console.print(f"\n[bold red]❌ 阶段 {final_state.get('stage')} 失败[/bold red]")
        print(error_line(final_state.get("stage", ""), final_state.get("error_kind") or "Error",
                         final_state.get("error") or ""), file=sys.stderr)
        return final_state.get("exit_code") or 1

    console.print("\n[bold green]✅ 处理完成！[/bold green]\n")
    console.print("[bold]耗时:[/bold]")
    for stage, seconds in final_state.get("timings", {}).items():
        console.print(f"  • {stage}: {seconds:.1f}s")
    if "evaluate" in stages:
        console.print(f"\n[bold]评估报告:[/bold] {final_state['report_dir']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
