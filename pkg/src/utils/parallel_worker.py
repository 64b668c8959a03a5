"""并行工作器模块 - 统一的 ParallelWorker 实现

This module runs independent tasks (candidate scans, bootstrap runs,
simulation replications) on a thread pool. Results always come back in input
order, so reductions over them are deterministic whatever the worker count.
"""
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, Tuple, TypeVar

from .log_manager import get_logger

logger = get_logger()

T = TypeVar('T')
R = TypeVar('R')


def resolve_threads(threads: Optional[int]) -> int:
    """0/None 表示使用全部可用核心"""
    if not threads or threads < 1:
        return max(1, os.cpu_count() or 1)
    return int(threads)


class ParallelWorker:
    """线程池工作器

    numpy 的线性代数在计算期间释放 GIL，线程池即可获得并行收益。
    """

    def __init__(self, max_workers: Optional[int] = 1, service_name: str = "ParallelWorker"):
        """初始化工作器

        Args:
            max_workers: 最大线程数，0/None 表示全部核心
            service_name: 服务名称，用于日志记录
        """
        self._max_workers = resolve_threads(max_workers)
        self._service_name = service_name

    @property
    def max_workers(self) -> int:
        return self._max_workers

    def map(self, func: Callable[[T], R], items: Iterable[T]) -> List[R]:
        """按输入顺序返回结果，任一任务失败即抛出"""
        items = list(items)
        if self._max_workers == 1 or len(items) <= 1:
            return [self._run(func, item) for item in items]
        with ThreadPoolExecutor(max_workers=self._max_workers) as pool:
            return list(pool.map(lambda item: self._run(func, item), items))

    def map_settled(
        self,
        func: Callable[[T], R],
        items: Iterable[T],
        expected: Tuple[type, ...] = (Exception,)
    ) -> List[Tuple[Optional[R], Optional[BaseException]]]:
        """逐项捕获预期异常，返回 (结果, 异常) 列表"""
        def settle(item: T) -> Tuple[Optional[R], Optional[BaseException]]:
            try:
                return func(item), None
            except expected as e:
                logger.debug(f"[{self._service_name}] task failed: {type(e).__name__}: {e}")
                return None, e

        items = list(items)
        if self._max_workers == 1 or len(items) <= 1:
            return [settle(item) for item in items]
        with ThreadPoolExecutor(max_workers=self._max_workers) as pool:
            return list(pool.map(settle, items))

    def _run(self, func: Callable[[T], R], item: T) -> R:
        try:
            return func(item)
        except Exception as e:
            logger.log_service_error(self._service_name, "map", e)
            raise

