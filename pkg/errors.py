"""
StrideSense 异常定义

所有流水线错误都继承 StrideSenseError，并携带进程退出码：
1 表示数据错误，2 表示用法错误。
"""

from typing import Optional


class StrideSenseError(Exception):
    """所有 StrideSense 错误的基类"""
    exit_code: int = 1

    @property
    def kind(self) -> str:
        """错误类别名（用于结构化错误输出）"""
        return type(self).__name__


class UsageError(StrideSenseError):
    """命令行参数或配置不合法"""
    exit_code = 2


class ArtifactIOError(StrideSenseError):
    """读写产物文件失败"""


class LengthMismatch(StrideSenseError):
    """两个序列长度不一致"""


class InternalError(StrideSenseError):
    """阶段内部出现未预期的异常"""


# ---- audio-io ----

class MalformedContainer(StrideSenseError):
    """RIFF/fmt/data 块结构损坏"""


class UnsupportedEncoding(StrideSenseError):
    """非 PCM 或位深不是 16 bit"""


class EmptyAudio(StrideSenseError):
    """data 块中没有任何帧"""


class SampleRateMismatch(StrideSenseError):
    """采样率与期望不符（流水线不做静默重采样）"""

    def __init__(self, found: int, expected: int):
        self.found = found
        self.expected = expected
        super().__init__(f"采样率不匹配: 实际 {found} Hz, 期望 {expected} Hz")


# ---- features ----

class ClipTooShort(StrideSenseError):
    """片段短于一个分析窗"""


class DegenerateFilter(StrideSenseError):
    """某个 Mel 滤波器在当前 FFT 分辨率下宽度为零"""


# ---- dataset ----

class ParseError(StrideSenseError):
    """清单文件解析失败，携带行号与字段"""

    def __init__(self, message: str, path: str = "", line: Optional[int] = None,
                 field: Optional[str] = None):
        self.path = path
        self.line = line
        self.field = field
        location = path
        if line is not None:
            location += f":{line}"
        if field:
            location += f" [{field}]"
        super().__init__(f"{location}: {message}" if location else message)


class RangeViolation(ParseError):
    """标签取值越界（疲劳度 6..20，健康度 -5..5）"""


class UnknownRunner(StrideSenseError):
    """引用了不存在的跑者"""


class EventsNotSorted(StrideSenseError):
    """回答事件没有按时间严格递增"""


class TooFewSessions(StrideSenseError):
    """会话数不足以划分三个分区"""


# ---- tensor-nn ----

class ShapeMismatch(StrideSenseError):
    """张量形状不一致"""


class DegenerateBatch(StrideSenseError):
    """训练模式下批归一化的统计样本只有一个"""


class InputTooSmall(StrideSenseError):
    """池化输入的空间尺寸小于核大小"""


class NonScalarLoss(StrideSenseError):
    """梯度检查要求标量损失"""


# ---- model ----

class InvalidConfig(StrideSenseError):
    """模型或生成器配置不合法"""


class InputTooShort(StrideSenseError):
    """输入帧数不足以通过全部池化层"""


class NotStandardized(StrideSenseError):
    """模型缺少输入标准化统计量"""


class VersionMismatch(StrideSenseError):
    """检查点格式版本不匹配"""


class CorruptFile(StrideSenseError):
    """文件截断、魔数错误或校验和不符"""


class IncompatibleBackbone(StrideSenseError):
    """检查点主干与目标结构不兼容"""


# ---- training / evaluation ----

class TooShort(StrideSenseError):
    """CCC 至少需要两个样本"""


class EmptyPartition(StrideSenseError):
    """训练或开发分区为空（或不足两个片段）"""


class EmptyInput(StrideSenseError):
    """指标输入为空"""


class MissingFeatures(StrideSenseError):
    """片段缺少特征缓存文件"""
