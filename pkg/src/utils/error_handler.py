"""错误处理工具

This module provides the non-fatal issue queue used by long runs (skipped
candidates, failed replications, bootstrap redraws), user-friendly messages,
and the machine-readable error record / exit-code contract of the CLI.
"""
from collections import deque
from typing import Any, Deque, Dict, List, Optional
import time

from ..core.errors import ErrorType, FactorStepError
from ..core.models import ErrorItem


# 详细模式下错误信息附带原始消息
IS_DEBUG = True


class ErrorQueue:
    """错误队列管理器"""

    DEFAULT_MAX_SIZE = 1000

    def __init__(self, max_size: int = DEFAULT_MAX_SIZE):
        self._queue: Deque[ErrorItem] = deque(maxlen=max_size)
        self._max_size = max_size

    def push(self, error: ErrorItem) -> None:
        """添加错误到队列"""
        self._queue.append(error)

    def pop(self) -> Optional[ErrorItem]:
        """获取并移除队首错误"""
        if self._queue:
            return self._queue.popleft()
        return None

    def peek(self) -> Optional[ErrorItem]:
        """查看队首错误但不移除"""
        if self._queue:
            return self._queue[0]
        return None

    def clear(self) -> None:
        """清空错误队列"""
        self._queue.clear()

    def is_empty(self) -> bool:
        return len(self._queue) == 0

    def size(self) -> int:
        return len(self._queue)

    def is_full(self) -> bool:
        return len(self._queue) >= self._max_size

    def items(self) -> List[ErrorItem]:
        return list(self._queue)

    def messages(self) -> List[str]:
        """供清单记录的文本形式"""
        out = []
        for item in self._queue:
            prefix = f"[{item.error_type.value}]"
            if item.context:
                prefix += f" {item.context}:"
            out.append(f"{prefix} {item.message}")
        return out

    def create_error(
        self,
        error_type: ErrorType,
        message: str,
        retryable: bool = False,
        context: str = ""
    ) -> ErrorItem:
        """创建并添加错误项"""
        error = ErrorItem(
            error_type=error_type,
            message=message,
            timestamp=time.time(),
            retryable=retryable,
            context=context
        )
        self.push(error)
        return error

    def create_numerical_error(self, message: str, context: str = "", retryable: bool = False) -> ErrorItem:
        return self.create_error(ErrorType.NUMERICAL_ERROR, message, retryable=retryable, context=context)

    def create_data_error(self, message: str, context: str = "") -> ErrorItem:
        return self.create_error(ErrorType.DATA_ERROR, message, context=context)

    def record_exception(self, error: Exception, context: str = "") -> ErrorItem:
        """记录一个被吞掉的异常"""
        error_type = error.error_type if isinstance(error, FactorStepError) else ErrorType.NUMERICAL_ERROR
        return self.create_error(error_type, str(error), context=context)


# 用户友好的错误消息映射
USER_FRIENDLY_MESSAGES: Dict[ErrorType, str] = {
    ErrorType.USAGE_ERROR: "命令行参数错误，请使用 --help 查看用法",
    ErrorType.CONFIG_ERROR: "配置错误，请检查参数与配置文件",
    ErrorType.DATA_ERROR: "输入数据错误，请检查 CSV 文件",
    ErrorType.NUMERICAL_ERROR: "数值计算失败，请检查因子共线性或样本长度",
}

# 脚本调用的稳定退出码
EXIT_CODES: Dict[ErrorType, int] = {
    ErrorType.USAGE_ERROR: 2,
    ErrorType.CONFIG_ERROR: 2,
    ErrorType.DATA_ERROR: 3,
    ErrorType.NUMERICAL_ERROR: 4,
}


def get_user_friendly_message(error_type: ErrorType, original_message: str = "") -> str:
    """获取用户友好的错误消息

    详细模式返回附带原始信息的消息
    """
    if IS_DEBUG:
        base_msg = USER_FRIENDLY_MESSAGES.get(error_type, "未知错误")
        if original_message:
            return f"{base_msg}\n详情: {original_message}"
        return base_msg
    return USER_FRIENDLY_MESSAGES.get(error_type, "操作失败")


def format_exception_for_display(e: Exception) -> str:
    """格式化异常用于显示"""
    if IS_DEBUG:
        return f"{type(e).__name__}: {str(e)}"
    return str(e) if str(e) else "操作失败"


def classify_exception(error: BaseException) -> ErrorType:
    """把任意异常归到 ErrorType"""
    if isinstance(error, FactorStepError):
        return error.error_type
    if isinstance(error, (FileNotFoundError, IsADirectoryError, UnicodeDecodeError)):
        return ErrorType.DATA_ERROR
    if isinstance(error, (ValueError, KeyError)):
        return ErrorType.CONFIG_ERROR
    return ErrorType.NUMERICAL_ERROR


def exit_code_for(error: BaseException) -> int:
    return EXIT_CODES[classify_exception(error)]


def build_error_record(error: BaseException) -> Dict[str, Any]:
    """机器可读的错误记录"""
    error_type = classify_exception(error)
    record: Dict[str, Any] = {
        "error": type(error).__name__,
        "type": error_type.value,
        "message": str(error),
        "details": getattr(error, "details", ""),
        "exit_code": EXIT_CODES[error_type],
    }
    names = getattr(error, "names", None)
    if names:
        record["names"] = list(names)
    return record
