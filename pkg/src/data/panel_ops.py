"""面板变换: 交易成本、子集、折划分、拼接"""
from typing import Optional, Sequence, Tuple

import numpy as np

from ..core.errors import EmptyResultError, PreconditionError, UnknownNameError
from ..core.models import CostSchedule, FoldSplit, ReturnPanel

BPS = 10000.0


def adjust_costs(panel: ReturnPanel, costs: CostSchedule) -> ReturnPanel:
    """每期收益扣除单边成本 bps/10000"""
    unknown = [n for n in costs.costs if n not in panel.names]
    if unknown:
        raise UnknownNameError(unknown, "cost schedule name")
    if not costs.costs:
        return panel
    deduction = np.array([costs.get(n) for n in panel.names]) / BPS
    return ReturnPanel(panel.periods, panel.names, panel.returns - deduction)


def subset(panel: ReturnPanel, names: Optional[Sequence[str]] = None,
           period_range: Optional[Tuple[Optional[str], Optional[str]]] = None) -> ReturnPanel:
    """按名称和期间范围取子面板，保持原有顺序

    period_range is inclusive on both ends; either end may be None. Labels
    must exist in the panel.
    """
    if names is None:
        col_idx = list(range(panel.n_assets))
    else:
        wanted = set(names)
        panel.index_of(list(names))
        col_idx = [i for i, n in enumerate(panel.names) if n in wanted]

    rows = np.arange(panel.t_obs)
    if period_range is not None:
        start, end = period_range
        labels = list(panel.periods)
        missing = [p for p in (start, end) if p and p not in labels]
        if missing:
            raise UnknownNameError(missing, "period")
        lo = labels.index(start) if start else 0
        hi = labels.index(end) if end else panel.t_obs - 1
        rows = rows[lo:hi + 1]

    if not col_idx or rows.size == 0:
        raise EmptyResultError("subset selects no data")
    return ReturnPanel(
        tuple(panel.periods[i] for i in rows),
        tuple(panel.names[i] for i in col_idx),
        panel.returns[np.ix_(rows, col_idx)],
    )


def select_rows(panel: ReturnPanel, periods: Sequence[str]) -> ReturnPanel:
    """保留给定期间（如高/低情绪月份），顺序不变"""
    wanted = set(periods)
    missing = [p for p in periods if p not in panel.periods]
    if missing:
        raise UnknownNameError(missing, "period")
    rows = [i for i, p in enumerate(panel.periods) if p in wanted]
    if not rows:
        raise EmptyResultError("period list selects no rows")
    return ReturnPanel(tuple(panel.periods[i] for i in rows), panel.names, panel.returns[rows])


def combine(panel: ReturnPanel, extra: ReturnPanel) -> ReturnPanel:
    """把测试资产面板按列拼到因子面板后"""
    return panel.join(extra)


def split_folds(panel: ReturnPanel, k: int) -> FoldSplit:
    """k 个连续折，大小相差不超过 1，较大的折在前"""
    return split_positions(panel.t_obs, k)


def split_positions(t_obs: int, k: int) -> FoldSplit:
    if k < 2:
        raise PreconditionError(f"need at least 2 folds, got {k}")
    if k > t_obs:
        raise PreconditionError(f"cannot split {t_obs} periods into {k} folds")
    base, extra = divmod(t_obs, k)
    folds, start = [], 0
    for f in range(k):
        size = base + (1 if f < extra else 0)
        folds.append(tuple(range(start, start + size)))
        start += size
    return FoldSplit(tuple(folds), t_obs)
