"""配对月份 bootstrap 夏普比较

Months are paired (1,2), (3,4), ...; each run draws T/2 pairs with
replacement and sends one month of every drawn pair to the in-sample set and
its partner to the out-of-sample set. Each run owns an RNG stream seeded by
(seed, run), so the report does not depend on the worker count.
"""
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from ..core.errors import NumericalError, PreconditionError, ResampleExhaustedError
from ..core.frontier import max_sq_sharpe, moments_from_array, realized_sharpe, solve_psd
from ..core.models import BootstrapReport, ReturnPanel
from ..utils.error_handler import ErrorQueue
from ..utils.log_manager import get_logger
from ..utils.parallel_worker import ParallelWorker

logger = get_logger()

MAX_REDRAWS = 100
PERCENT = 100.0


def pair_draw(rng: np.random.Generator, n_pairs: int) -> Tuple[np.ndarray, np.ndarray]:
    """一次配对抽样，返回 (INS 月份位置, OOS 月份位置)"""
    picks = rng.integers(0, n_pairs, size=n_pairs)
    coin = rng.integers(0, 2, size=n_pairs)
    return 2 * picks + coin, 2 * picks + 1 - coin


def _run_sharpes(returns: np.ndarray, columns: Sequence[np.ndarray],
                 ins: np.ndarray, oos: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    ins_sr = np.empty(len(columns))
    oos_sr = np.empty(len(columns))
    for k, idx in enumerate(columns):
        m = moments_from_array(returns[np.ix_(ins, idx)])
        ins_sr[k] = np.sqrt(max_sq_sharpe(m))
        if np.any(m.mean):
            weights = solve_psd(m.cov, m.mean)
            oos_sr[k] = realized_sharpe(returns[np.ix_(oos, idx)] @ weights)
        else:
            oos_sr[k] = 0.0
    return ins_sr, oos_sr


def _beat_matrices(values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """runs×M -> (beat %, tie %)，同分各记一半"""
    m = values.shape[1]
    beat = np.full((m, m), np.nan)
    tie = np.full((m, m), np.nan)
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            wins = np.mean(values[:, i] > values[:, j])
            ties = np.mean(values[:, i] == values[:, j])
            beat[i, j] = PERCENT * (wins + 0.5 * ties)
            tie[i, j] = PERCENT * ties
    return beat, tie


def _best_frequency(values: np.ndarray) -> np.ndarray:
    """并列最优平分该次的计数"""
    best = values.max(axis=1, keepdims=True)
    winners = values == best
    share = winners / winners.sum(axis=1, keepdims=True)
    return PERCENT * share.mean(axis=0)


def bootstrap_sr(panel: ReturnPanel, models: Dict[str, Sequence[str]], runs: int = 1000,
                 seed: int = 0, threads: int = 1, max_redraws: int = MAX_REDRAWS,
                 issues: Optional[ErrorQueue] = None) -> BootstrapReport:
    """配对月份 bootstrap 比较多个模型的 INS SR² 与 OOS 夏普"""
    if runs < 1:
        raise PreconditionError(f"runs must be >= 1, got {runs}")
    if not models:
        raise PreconditionError("bootstrap needs at least one model")
    names = tuple(models)
    # 列按面板顺序排列，同一因子集合得到逐位相同的夏普
    columns = [np.sort(np.array(panel.index_of(list(models[n])), dtype=int)) for n in names]

    t_obs = panel.t_obs
    if t_obs % 2:
        logger.warning(f"Odd sample length {t_obs}: dropping the trailing period {panel.periods[-1]}")
        t_obs -= 1
    n_pairs = t_obs // 2
    if n_pairs < 2:
        raise PreconditionError(f"bootstrap needs at least 4 periods, got {panel.t_obs}")
    returns = panel.returns[:t_obs]

    def one_run(run: int) -> Tuple[np.ndarray, np.ndarray, int]:
        rng = np.random.default_rng(np.random.SeedSequence([seed, run]))
        for attempt in range(max_redraws + 1):
            ins, oos = pair_draw(rng, n_pairs)
            try:
                ins_sr, oos_sr = _run_sharpes(returns, columns, ins, oos)
                return ins_sr, oos_sr, attempt
            except NumericalError as e:
                logger.debug(f"Bootstrap run {run} attempt {attempt} redrawn: {e}")
        raise ResampleExhaustedError(run, max_redraws)

    worker = ParallelWorker(threads, "BootstrapService")
    results = worker.map(one_run, range(runs))

    ins = np.array([r[0] for r in results])
    oos = np.array([r[1] for r in results])
    redraws = int(sum(r[2] for r in results))
    if redraws and issues is not None:
        issues.create_numerical_error(f"{redraws} singular resamples were redrawn", context="bootstrap")

    beat_ins, tie_ins = _beat_matrices(ins)
    beat_oos, tie_oos = _beat_matrices(oos)
    report = BootstrapReport(
        model_names=names,
        mean_ins_sr2=(ins ** 2).mean(axis=0),
        mean_oos_sr2=(np.sign(oos) * oos ** 2).mean(axis=0),
        beat_ins=beat_ins,
        beat_oos=beat_oos,
        tie_ins=tie_ins,
        tie_oos=tie_oos,
        best_ins=_best_frequency(ins),
        best_oos=_best_frequency(oos),
        runs=runs,
        seed=seed,
        redraws=redraws,
    )
    logger.info(f"Bootstrap finished: {runs} runs, {len(names)} models, {redraws} redraws")
    return report
