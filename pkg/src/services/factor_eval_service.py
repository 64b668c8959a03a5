"""单因子进入/退出评价

Each non-core factor is tested by running FSE+BSE from core ∪ {factor};
Selected says whether the factor survives, Same whether the reduced model
matches a reference model, and Rate is a factor's inclusion frequency across
all runs' reduced models.
"""
from dataclasses import dataclass, replace
from typing import Dict, Optional, Sequence, Tuple

from ..core.errors import NumericalError, PreconditionError
from ..core.models import FactorVerdict, ReturnPanel, SelectionConfig
from ..utils.error_handler import ErrorQueue
from ..utils.log_manager import get_logger
from ..utils.parallel_worker import ParallelWorker
from .stepwise_service import StepwiseService, evaluate_factor

logger = get_logger()


@dataclass(frozen=True)
class FactorEvalTable:
    verdicts: Tuple[FactorVerdict, ...]
    rates: Dict[str, float]
    core: Tuple[str, ...]
    runs: int
    failed: Tuple[str, ...] = ()


def factor_eval_batch(panel: ReturnPanel, core: Sequence[str],
                      cfg: Optional[SelectionConfig] = None,
                      extra_assets: Optional[ReturnPanel] = None,
                      reference: Optional[Sequence[str]] = None,
                      issues: Optional[ErrorQueue] = None) -> FactorEvalTable:
    """对每个非核心因子运行 evaluate_factor"""
    cfg = cfg or SelectionConfig()
    core = tuple(core)
    if not core:
        raise PreconditionError("core model must contain at least one factor")
    panel.index_of(core)
    candidates = [n for n in panel.names if n not in core]
    if not candidates:
        raise PreconditionError("every factor is in the core model; nothing to evaluate")

    # 外层按因子并行，内层扫描串行
    service = StepwiseService(panel, extra_assets, replace(cfg, threads=1), issues)
    worker = ParallelWorker(cfg.threads, "FactorEvalService")
    settled = worker.map_settled(
        lambda factor: evaluate_factor(panel, factor, core, extra_assets, cfg, service),
        candidates,
        expected=(NumericalError, PreconditionError),
    )

    reference_set = frozenset(reference) if reference is not None else None
    verdicts, failed = [], []
    for factor, (verdict, error) in zip(candidates, settled):
        if error is not None:
            failed.append(factor)
            logger.warning(f"Factor {factor} could not be evaluated: {error}")
            if issues is not None:
                issues.record_exception(error, context=f"factor {factor}")
            continue
        same = None if reference_set is None else frozenset(verdict.final_model) == reference_set
        verdicts.append(replace(verdict, same=same))

    runs = len(verdicts)
    rates = {
        name: (sum(name in v.final_model for v in verdicts) / runs if runs else 0.0)
        for name in panel.names
    }
    logger.info(f"Factor evaluation: {runs} runs, {len(failed)} failed, "
                f"{sum(v.selected for v in verdicts)} selected")
    return FactorEvalTable(tuple(verdicts), rates, core, runs, tuple(failed))
