"""逐步选择服务: FSE / BSE

Forward stepwise evaluation adds, at each step, the candidate that maximizes
the model SR² (equivalently minimizes GRS); backward stepwise evaluation
removes the factor whose removal keeps SR² highest. Both stop on the
configured test (HDA or GRS). Candidate scans fan out over a thread pool
and are reduced deterministically: highest score first, ties broken by the
lexicographically smallest factor name.
"""
from dataclasses import replace
from typing import List, Optional, Protocol, Sequence, Tuple

import numpy as np

from ..core.errors import (
    AllCandidatesFailedError,
    NumericalError,
    PreconditionError,
    SingularCovarianceError,
)
from ..core.frontier import annualize_sr2, max_sq_sharpe, moments, ols_with_intercept
from ..core.models import (
    Criterion,
    FactorVerdict,
    ReturnPanel,
    SelectionConfig,
    SelectionMode,
    SelectionPath,
    StepAction,
    StepRecord,
    StopRule,
)
from ..core.pricing_tests import TestUniverse, grs_from_sr2, grs_result, hda_from_ols
from ..utils.error_handler import ErrorQueue
from ..utils.log_manager import get_logger
from ..utils.parallel_worker import ParallelWorker

logger = get_logger()

NAN = float("nan")


class IStepwiseService(Protocol):
    """逐步选择服务接口协议"""

    def fse(self, baseline: Sequence[str]) -> SelectionPath: ...
    def bse(self, model: Sequence[str]) -> SelectionPath: ...
    def select(self, baseline: Sequence[str]) -> SelectionPath: ...


class StepwiseService:
    """在固定面板上运行 FSE/BSE

    全样本矩只计算一次，每个候选模型按位置切片。
    """

    def __init__(
        self,
        panel: ReturnPanel,
        extra_assets: Optional[ReturnPanel] = None,
        cfg: Optional[SelectionConfig] = None,
        issues: Optional[ErrorQueue] = None,
    ):
        self._cfg = cfg or SelectionConfig()
        self._universe = TestUniverse.build(panel, extra_assets, self._cfg.extra_in_universe)
        self._issues = issues
        self._worker = ParallelWorker(self._cfg.threads, "StepwiseService")

        data = self._universe.data
        self._all = moments(data)
        self._index = {name: i for i, name in enumerate(data.names)}
        self._sr2_full = self._full_universe_sr2()
        self._single = {
            name: (self._all.mean[i] ** 2 / self._all.cov[i, i]) if self._all.cov[i, i] > 0 else NAN
            for name, i in self._index.items()
        }

    # ==================== 基础计算 ====================

    @property
    def config(self) -> SelectionConfig:
        return self._cfg

    @property
    def universe(self) -> TestUniverse:
        return self._universe

    @property
    def default_max_steps(self) -> int:
        n = len(self._universe.candidates)
        return max(1, min(n - 2, self._universe.t_obs // 3))

    def _full_universe_sr2(self) -> float:
        universe = self._universe.universe
        if self._universe.t_obs <= len(universe):
            return NAN
        try:
            return max_sq_sharpe(self._all.take([self._index[n] for n in universe]))
        except SingularCovarianceError as e:
            logger.warning(f"Full-universe SR² undefined, GRS disabled: {e}")
            return NAN

    def model_sr2(self, model: Sequence[str]) -> float:
        """模型 SR²（按名称排序切片，结果与列顺序无关）"""
        idx = [self._index[n] for n in sorted(model)]
        return max_sq_sharpe(self._all.take(idx))

    def single_sr2(self, name: str) -> float:
        return self._single[name]

    def _grs_defined(self, model_size: int) -> bool:
        n = len(self._universe.universe)
        return np.isfinite(self._sr2_full) and self._universe.t_obs > n and model_size < n

    def evaluate(self, model: Sequence[str], step: int, action: StepAction,
                 factor: str = "") -> StepRecord:
        """计算模型的 SR²、GRS、HDA 并按停止规则判定"""
        model = tuple(model)
        u = self._universe
        cfg = self._cfg
        sr2 = self.model_sr2(model)

        grs = grs_p = NAN
        grs_rejected = None
        if self._grs_defined(len(model)):
            n = len(u.universe)
            value = grs_from_sr2(self._sr2_full, sr2, u.t_obs, n, len(model))
            result = grs_result(value, u.t_obs, n, len(model), cfg.significance)
            grs, grs_p, grs_rejected = result.statistic, result.p_value, result.rejected

        hda = hda_p = NAN
        hda_rejected = None
        lhs = u.lhs_for(model)
        if len(lhs) >= 2 and u.t_obs > len(model) + 2:
            ols = ols_with_intercept(u.data.columns(lhs), u.data.columns(model), model)
            result, _ = hda_from_ols(ols, lhs, sr2, u.t_obs, cfg.hda)
            hda, hda_p, hda_rejected = result.statistic, result.p_value, result.rejected

        rejected = hda_rejected if cfg.stop_rule is StopRule.HDA else grs_rejected
        if rejected is None:
            raise PreconditionError(
                f"{cfg.stop_rule.value.upper()} stop test is undefined for a model of "
                f"{len(model)} factors (T={u.t_obs}, LHS={len(lhs)})"
            )
        return StepRecord(
            step=step,
            action=action,
            factor=factor,
            grs=grs,
            grs_p=grs_p,
            sr2=sr2,
            sr_ann=float(np.sqrt(annualize_sr2(sr2, cfg.annualization))),
            hda_stat=hda,
            hda_p=hda_p,
            model_size=len(model),
            rejected=bool(rejected),
        )

    def _check_model(self, model: Sequence[str]) -> Tuple[str, ...]:
        return self._universe.check_model(model)

    def _skip(self, skipped: List[Tuple[int, str, str]], step: int, name: str, error: Exception) -> None:
        reason = f"{type(error).__name__}: {error}"
        skipped.append((step, name, reason))
        if self._issues is not None:
            self._issues.create_numerical_error(reason, context=f"step {step} candidate {name}")

    def _scan(self, step: int, options: List[str], score) -> Tuple[List[str], List[Tuple[int, str, str]]]:
        """并行打分并确定性排序: 分数高者在前，同分按名称升序"""
        settled = self._worker.map_settled(score, options, expected=(NumericalError,))
        skipped: List[Tuple[int, str, str]] = []
        scored = []
        for name, (value, error) in zip(options, settled):
            if error is not None:
                self._skip(skipped, step, name, error)
                continue
            scored.append((value, name))
        if not scored:
            raise AllCandidatesFailedError(step)
        scored.sort(key=lambda item: (-item[0], item[1]))
        return [name for _, name in scored], skipped

    def _first_valid(self, step: int, ranked: List[str], build, action: StepAction,
                     skipped: List[Tuple[int, str, str]]) -> Tuple[str, StepRecord]:
        """按排名依次做停止检验，检验数值失败的候选跳过"""
        for name in ranked:
            try:
                return name, self.evaluate(build(name), step, action, name)
            except NumericalError as e:
                self._skip(skipped, step, name, e)
        raise AllCandidatesFailedError(step)

    # ==================== FSE ====================

    def fse(self, baseline: Sequence[str]) -> SelectionPath:
        """前向逐步评估"""
        model = self._check_model(baseline)
        cfg = self._cfg
        max_steps = cfg.max_steps or self.default_max_steps

        first = self.evaluate(model, 0, StepAction.BASELINE)
        if not first.rejected:
            first = _mark_stopped(first)
            logger.log_step("FSE", first)
            return SelectionPath(model, (first,), model, True, ())
        logger.log_step("FSE", first)

        records: List[StepRecord] = [first]
        skipped: List[Tuple[int, str, str]] = []
        converged = False
        for step in range(1, max_steps + 1):
            if len(self._universe.lhs_for(model)) - 1 < 2:
                logger.warning(f"FSE stopped at step {step}: too few LHS assets remain")
                break
            options = [n for n in self._universe.candidates if n not in model]
            if cfg.criterion is Criterion.MODEL_SR2:
                score = lambda name, base=model: self.model_sr2(base + (name,))
            else:
                score = lambda name: self._single_score(name, +1)
            ranked, failed = self._scan(step, options, score)
            skipped.extend(failed)

            chosen, record = self._first_valid(
                step, ranked, lambda name, base=model: base + (name,), StepAction.ADD, skipped)
            model = model + (chosen,)
            if not record.rejected:
                record = _mark_stopped(record)
                records.append(record)
                logger.log_step("FSE", record)
                converged = True
                break
            records.append(record)
            logger.log_step("FSE", record)

        if not converged:
            logger.warning(f"FSE did not converge within {max_steps} steps; model size {len(model)}")
        return SelectionPath(model, tuple(records), model, converged, tuple(skipped))

    def _single_score(self, name: str, sign: int) -> float:
        value = self._single[name]
        if not np.isfinite(value):
            raise SingularCovarianceError(np.inf, name)
        return sign * value

    # ==================== BSE ====================

    def bse(self, model: Sequence[str]) -> SelectionPath:
        """后向逐步评估，返回导致拒绝的那次剔除之前的模型"""
        model = self._check_model(model)
        if len(model) < 2:
            raise PreconditionError(f"BSE needs a model of at least 2 factors, got {len(model)}")
        cfg = self._cfg
        max_steps = cfg.max_steps or (len(model) - 1)

        try:
            entry = self.evaluate(model, 0, StepAction.BASELINE)
            if entry.rejected:
                logger.warning(f"BSE input model {','.join(model)} fails the "
                               f"{cfg.stop_rule.value.upper()} test; pruning anyway")
        except (PreconditionError, NumericalError) as e:
            logger.warning(f"BSE entry check skipped: {e}")

        records: List[StepRecord] = []
        skipped: List[Tuple[int, str, str]] = []
        converged = True
        step = 1
        while len(model) >= 2:
            if step > max_steps:
                converged = False
                logger.warning(f"BSE hit max_steps={max_steps}; model size {len(model)}")
                break
            if cfg.criterion is Criterion.MODEL_SR2:
                score = lambda name, base=model: self.model_sr2(tuple(n for n in base if n != name))
            else:
                score = lambda name: self._single_score(name, -1)
            ranked, failed = self._scan(step, list(model), score)
            skipped.extend(failed)

            chosen, record = self._first_valid(
                step, ranked, lambda name, base=model: tuple(n for n in base if n != name),
                StepAction.REMOVE, skipped)
            reduced = tuple(n for n in model if n != chosen)
            if record.rejected:
                record = _mark_stopped(record)
                records.append(record)
                logger.log_step("BSE", record)
                break
            records.append(record)
            logger.log_step("BSE", record)
            model = reduced
            step += 1

        return SelectionPath(model, tuple(records), (), converged, tuple(skipped))

    # ==================== 组合 ====================

    def select(self, baseline: Sequence[str]) -> SelectionPath:
        """FSE 后接 BSE，路径拼接"""
        mode = self._cfg.mode
        if mode is SelectionMode.BSE_ONLY:
            return self.bse(baseline)
        forward = self.fse(baseline)
        if mode is SelectionMode.FSE_ONLY:
            return forward
        if len(forward.model) < 2:
            return forward
        backward = self.bse(forward.model)
        return SelectionPath(
            model=backward.model,
            records=forward.records + backward.records,
            expanded_model=forward.model,
            converged=forward.converged and backward.converged,
            skipped=forward.skipped + backward.skipped,
        )


def _mark_stopped(record: StepRecord) -> StepRecord:
    return replace(record, stopped=True)


# ==================== 快捷方法 ====================

def fse(panel: ReturnPanel, baseline: Sequence[str],
        extra_assets: Optional[ReturnPanel] = None,
        cfg: Optional[SelectionConfig] = None) -> SelectionPath:
    return StepwiseService(panel, extra_assets, cfg).fse(baseline)


def bse(panel: ReturnPanel, model: Sequence[str],
        extra_assets: Optional[ReturnPanel] = None,
        cfg: Optional[SelectionConfig] = None) -> SelectionPath:
    return StepwiseService(panel, extra_assets, cfg).bse(model)


def stepwise_select(panel: ReturnPanel, baseline: Sequence[str],
                    extra_assets: Optional[ReturnPanel] = None,
                    cfg: Optional[SelectionConfig] = None,
                    issues: Optional[ErrorQueue] = None) -> SelectionPath:
    """FSE → BSE"""
    return StepwiseService(panel, extra_assets, cfg, issues).select(baseline)


def evaluate_factor(panel: ReturnPanel, factor: str, core: Sequence[str],
                    extra_assets: Optional[ReturnPanel] = None,
                    cfg: Optional[SelectionConfig] = None,
                    service: Optional[StepwiseService] = None) -> FactorVerdict:
    """以 core ∪ {factor} 为基准做 FSE+BSE，判断因子是否留存"""
    core = tuple(core)
    if factor in core:
        raise PreconditionError(f"factor {factor} is already in the core model")
    service = service or StepwiseService(panel, extra_assets, cfg)
    path = service.select(core + (factor,))
    return FactorVerdict(factor, factor in path.model, path.model)
