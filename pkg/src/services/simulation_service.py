"""Monte Carlo 模拟研究

Data generation: f1 ~ N(mu1, sigma1) i.i.d. over t, f2 = βᵀf1 + u with
u ~ N(0, sigma2). The K1 risk factors form the true model. Every
replication draws from its own stream seeded by (seed, rep).
"""
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from ..core.errors import DataError, NonPositiveDefiniteError, NumericalError, PreconditionError
from ..core.models import (
    Criterion,
    MethodScore,
    ReturnPanel,
    SelectionConfig,
    SelectionMode,
    SimConfig,
    SimReport,
    StopRule,
)
from ..utils.error_handler import ErrorQueue
from ..utils.log_manager import get_logger
from ..utils.parallel_worker import ParallelWorker
from .stepwise_service import StepwiseService

logger = get_logger()

PERCENT = 100.0
STAGES = ("FSE", "BSE")

# 方法标签 -> (停止规则, 排序准则)
METHODS: Dict[str, Tuple[StopRule, Criterion]] = {
    "hda": (StopRule.HDA, Criterion.MODEL_SR2),
    "grs": (StopRule.GRS, Criterion.MODEL_SR2),
    "sr": (StopRule.HDA, Criterion.SINGLE_SR2),
}


def method_configs(labels: Sequence[str], significance: float = 0.05,
                   screen_level: Optional[float] = None) -> List[SelectionConfig]:
    """"hda,grs,sr" 之类的方法标签 -> SelectionConfig 列表"""
    configs = []
    for label in labels:
        key = label.strip().lower()
        if key not in METHODS:
            raise PreconditionError(f"unknown method {label!r}; choose from {', '.join(METHODS)}")
        stop, criterion = METHODS[key]
        configs.append(SelectionConfig(significance=significance, stop_rule=stop,
                                       criterion=criterion, screen_level=screen_level))
    return configs


def _cholesky(matrix: np.ndarray, label: str) -> np.ndarray:
    try:
        return linalg.cholesky(matrix, lower=True)
    except linalg.LinAlgError:
        raise NonPositiveDefiniteError(label)


def simulate_panel(cfg: SimConfig, rep: int) -> Tuple[ReturnPanel, Tuple[str, ...]]:
    """生成第 rep 次复制的面板与真实模型"""
    chol1 = _cholesky(cfg.sigma1, "sigma1")
    chol2 = _cholesky(cfg.sigma2, "sigma2")
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, rep]))

    f1 = cfg.mu1 + rng.standard_normal((cfg.t_obs, cfg.k1)) @ chol1.T
    u = rng.standard_normal((cfg.t_obs, cfg.k2)) @ chol2.T
    f2 = f1 @ cfg.beta + u

    width = len(str(cfg.t_obs))
    periods = tuple(f"t{t:0{width}d}" for t in range(1, cfg.t_obs + 1))
    return ReturnPanel(periods, cfg.names, np.hstack([f1, f2])), cfg.truth


def score_selections(selections: Sequence[FrozenSet[str]], truth: Sequence[str],
                     universe: Sequence[str]) -> Tuple[float, float, float, float, float]:
    """(|Ŝ|, CP, CF, TR, FR)，比率单位为 %"""
    truth = frozenset(truth)
    others = frozenset(universe) - truth
    if not selections:
        nan = float("nan")
        return nan, nan, nan, nan, nan
    sizes = [len(s) for s in selections]
    cp = [truth <= s for s in selections]
    cf = [s == truth for s in selections]
    tr = [len(s & truth) / len(truth) for s in selections]
    fr = [len(s & others) / len(others) if others else 0.0 for s in selections]
    return (float(np.mean(sizes)), PERCENT * float(np.mean(cp)), PERCENT * float(np.mean(cf)),
            PERCENT * float(np.mean(tr)), PERCENT * float(np.mean(fr)))


class SimulationService:
    """模拟研究服务"""

    def __init__(self, cfg: SimConfig, methods: Sequence[SelectionConfig],
                 threads: int = 1, issues: Optional[ErrorQueue] = None):
        if not methods:
            raise PreconditionError("simulation needs at least one method")
        labels = [m.label for m in methods]
        if len(set(labels)) != len(labels):
            raise PreconditionError(f"methods repeat a label: {', '.join(labels)}")
        _cholesky(cfg.sigma1, "sigma1")
        _cholesky(cfg.sigma2, "sigma2")
        self._cfg = cfg
        self._methods = [SelectionConfig(
            significance=m.significance, stop_rule=m.stop_rule, criterion=m.criterion,
            max_steps=m.max_steps, mode=SelectionMode.FULL, screen_level=m.screen_level,
            extra_in_universe=m.extra_in_universe, annualization=m.annualization, threads=1,
        ) for m in methods]
        self._worker = ParallelWorker(threads, "SimulationService")
        self._issues = issues

    def replicate(self, rep: int) -> Dict[str, Optional[Tuple[FrozenSet[str], FrozenSet[str]]]]:
        """一次复制: 方法标签 -> (FSE 模型, 最终模型)，失败为 None"""
        panel, _ = simulate_panel(self._cfg, rep)
        out: Dict[str, Optional[Tuple[FrozenSet[str], FrozenSet[str]]]] = {}
        for method in self._methods:
            try:
                path = StepwiseService(panel, None, method).select(self._cfg.baseline)
                out[method.label] = (frozenset(path.expanded_model), frozenset(path.model))
            except (NumericalError, DataError) as e:
                logger.debug(f"Replication {rep} method {method.label} failed: {e}")
                if self._issues is not None:
                    self._issues.record_exception(e, context=f"rep {rep} {method.label}")
                out[method.label] = None
        return out

    def run(self, reps: int) -> SimReport:
        if reps < 1:
            raise PreconditionError(f"reps must be >= 1, got {reps}")
        cfg = self._cfg
        logger.info(f"Simulation: K1={cfg.k1} K2={cfg.k2} T={cfg.t_obs} case={cfg.baseline_case} "
                    f"reps={reps} methods={','.join(m.label for m in self._methods)}")
        results = self._worker.map(self.replicate, range(reps))

        rows: List[MethodScore] = []
        rates: Dict[str, Tuple[float, ...]] = {}
        names = cfg.names
        total_failures = 0
        for stage_index, stage in enumerate(STAGES):
            for method in self._methods:
                label = method.label
                picked = [r[label][stage_index] for r in results if r[label] is not None]
                failures = reps - len(picked)
                if stage_index == 0:
                    total_failures += failures
                size, cp, cf, tr, fr = score_selections(picked, cfg.truth, names)
                rows.append(MethodScore(label, stage, size, cp, cf, tr, fr, len(picked), failures))
                denom = max(len(picked), 1)
                rates[f"{stage}({label})"] = tuple(
                    sum(name in s for s in picked) / denom for name in names
                )
        return SimReport(tuple(rows), names, rates, reps, total_failures)


def run_sim_study(cfg: SimConfig, methods: Sequence[SelectionConfig], reps: int,
                  threads: int = 1, issues: Optional[ErrorQueue] = None) -> SimReport:
    """模拟研究快捷方法"""
    return SimulationService(cfg, methods, threads, issues).run(reps)
