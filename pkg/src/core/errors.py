"""异常层次 - Exception hierarchy

Every failure the toolkit raises derives from ``FactorStepError`` and carries
an ``ErrorType``. The CLI maps the type to a stable exit code (see
``src/utils/error_handler.py``).
"""
from enum import Enum
from typing import Iterable, Optional


class ErrorType(Enum):
    """错误类型枚举"""
    USAGE_ERROR = "usage_error"
    CONFIG_ERROR = "config_error"
    DATA_ERROR = "data_error"
    NUMERICAL_ERROR = "numerical_error"


class FactorStepError(Exception):
    """工具包异常基类"""

    error_type: ErrorType = ErrorType.DATA_ERROR

    def __init__(self, message: str, details: str = ""):
        super().__init__(message)
        self.message = message
        self.details = details


# ==================== 用法 / 配置错误 ====================

class UsageError(FactorStepError):
    """命令行用法错误（未知参数、缺少子命令）"""
    error_type = ErrorType.USAGE_ERROR


class ConfigError(FactorStepError):
    """配置值非法"""
    error_type = ErrorType.CONFIG_ERROR


class UnknownFactorError(ConfigError):
    """模型设定引用了面板中不存在的因子"""

    def __init__(self, names: Iterable[str]):
        self.names = tuple(names)
        super().__init__(f"unknown factor(s): {', '.join(self.names)}")


# ==================== 数据错误 ====================

class DataError(FactorStepError):
    """输入数据错误"""
    error_type = ErrorType.DATA_ERROR


class EmptyFileError(DataError):
    def __init__(self, path: str):
        self.path = path
        super().__init__(f"empty file: {path}")


class DuplicateNameError(DataError):
    def __init__(self, names: Iterable[str]):
        self.names = tuple(names)
        super().__init__(f"duplicate name(s): {', '.join(self.names)}")


class RaggedRowError(DataError):
    def __init__(self, row: int, expected: int, found: int):
        self.row = row
        self.expected = expected
        self.found = found
        super().__init__(f"row {row} has {found} fields, expected {expected}")


class UnparseableNumberError(DataError):
    def __init__(self, row: int, column: str, value: str):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"cannot parse {value!r} at row {row}, column {column!r}")


class UnknownNameError(DataError):
    def __init__(self, names: Iterable[str], what: str = "name"):
        self.names = tuple(names)
        super().__init__(f"unknown {what}(s): {', '.join(self.names)}")


class EmptyResultError(DataError):
    pass


class PeriodMismatchError(DataError):
    pass


class PreconditionError(DataError):
    """调用前置条件不满足"""
    pass


# ==================== 数值错误 ====================

class NumericalError(FactorStepError):
    """数值计算失败"""
    error_type = ErrorType.NUMERICAL_ERROR


class SingularCovarianceError(NumericalError):
    def __init__(self, condition_number: float, label: str = ""):
        self.condition_number = condition_number
        where = f" for {label}" if label else ""
        super().__init__(
            f"singular covariance{where}: condition number {condition_number:.3e}"
        )


class CollinearModelError(NumericalError):
    def __init__(self, rank: int, columns: int, names: Optional[Iterable[str]] = None):
        self.rank = rank
        self.columns = columns
        label = f" ({', '.join(names)})" if names else ""
        super().__init__(f"rank-deficient design matrix{label}: rank {rank} < {columns}")


class ZeroResidualVarianceError(NumericalError):
    def __init__(self, names: Iterable[str]):
        self.names = tuple(names)
        super().__init__(f"zero residual variance with nonzero alpha: {', '.join(self.names)}")


class ZeroMeanError(NumericalError):
    def __init__(self):
        super().__init__("mean vector is zero, tangency weights are undefined")


class NonPositiveDefiniteError(NumericalError):
    def __init__(self, label: str):
        self.label = label
        super().__init__(f"{label} is not positive definite")


class AllCandidatesFailedError(NumericalError):
    def __init__(self, step: int):
        self.step = step
        super().__init__(f"every candidate failed numerically at step {step}")


class ResampleExhaustedError(NumericalError):
    def __init__(self, run: int, attempts: int):
        self.run = run
        self.attempts = attempts
        super().__init__(f"bootstrap run {run} stayed singular after {attempts} redraws")
