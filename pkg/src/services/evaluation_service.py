"""模型评价服务: 定价指标、投资指标、样本内/样本外

Pricing metrics report A|α| (%), A|t(α)|, #|t|>1.96, Total R² (%) and CS R²
(%) of a model against a set of target assets. Both R² measures are relative
to the CAPM: predictions exclude the estimated intercept, and the
cross-sectional premia come from a no-intercept regression of mean returns on
betas (an intercept can be switched on). Out-of-sample figures freeze every
training-sample estimate (betas, premia, tangency weights) and apply it to the
held-out fold.
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.errors import PreconditionError, UnknownNameError
from ..core.frontier import (
    DEFAULT_ANNUALIZATION,
    DEFAULT_TARGET_VOL,
    annualize_sharpe,
    moments,
    ols_with_intercept,
    portfolio_returns,
    realized_sharpe,
    significance_stars,
    tangency_weights,
)
from ..core.models import (
    BenchmarkAlpha,
    FoldSplit,
    InvestMetrics,
    OosFoldReport,
    PricingMetrics,
    ReturnPanel,
    SelectionConfig,
)
from ..utils.log_manager import get_logger
from .stepwise_service import stepwise_select

logger = get_logger()

T_CUTOFF = 1.96
PERCENT = 100.0


@dataclass(frozen=True)
class PricingParams:
    """训练样本上估计、样本外冻结使用的定价参数"""
    betas: np.ndarray          # K×N
    premia: np.ndarray         # K（cs_intercept 时首项为截距）
    capm_betas: np.ndarray     # N
    market_premium: float
    cs_intercept: bool = False


def _rows(panel: ReturnPanel, idx: np.ndarray) -> ReturnPanel:
    return ReturnPanel(tuple(panel.periods[i] for i in idx), panel.names, panel.returns[idx])


def _check_targets(panel: ReturnPanel, model: Sequence[str], targets: Sequence[str],
                   market: str) -> None:
    if not targets:
        raise PreconditionError("pricing metrics need at least one target asset")
    overlap = set(model) & set(targets)
    if overlap:
        raise PreconditionError(f"targets overlap the model: {', '.join(sorted(overlap))}")
    if market not in panel.names:
        raise UnknownNameError([market], "market factor")
    panel.index_of(list(model) + list(targets))


def _cs_fit(mean_returns: np.ndarray, betas: np.ndarray, cs_intercept: bool) -> np.ndarray:
    design = betas.T
    if cs_intercept:
        design = np.column_stack([np.ones(design.shape[0]), design])
    premia, _, _, _ = np.linalg.lstsq(design, mean_returns, rcond=None)
    return premia


def _cs_predict(params: PricingParams) -> np.ndarray:
    design = params.betas.T
    if params.cs_intercept:
        design = np.column_stack([np.ones(design.shape[0]), design])
    return design @ params.premia


def fit_pricing(panel: ReturnPanel, model: Sequence[str], targets: Sequence[str],
                market: str = "MKT", cs_intercept: bool = False) -> PricingParams:
    """估计定价参数"""
    r = panel.columns(targets)
    fit = ols_with_intercept(r, panel.columns(model), model)
    capm = ols_with_intercept(r, panel.column(market), (market,))
    premia = _cs_fit(r.mean(axis=0), fit.betas, cs_intercept)
    return PricingParams(fit.betas, premia, capm.betas[0], float(panel.column(market).mean()),
                         cs_intercept)


def _r2_pair(panel: ReturnPanel, model: Sequence[str], targets: Sequence[str], market: str,
             params: PricingParams) -> Tuple[float, float]:
    """在 panel 上用给定参数计算 Total R² 与 CS R²（%）"""
    r = panel.columns(targets)
    f = panel.columns(model)
    mkt = panel.column(market)

    resid = r - f @ params.betas
    resid_capm = r - np.outer(mkt, params.capm_betas)
    total = 1.0 - np.sum(resid ** 2) / np.sum(resid_capm ** 2)

    mean_r = r.mean(axis=0)
    cs_resid = mean_r - _cs_predict(params)
    cs_resid_capm = mean_r - params.capm_betas * params.market_premium
    cs = 1.0 - np.sum(cs_resid ** 2) / np.sum(cs_resid_capm ** 2)
    return PERCENT * float(total), PERCENT * float(cs)


def pricing_metrics(panel: ReturnPanel, model: Sequence[str], targets: Sequence[str],
                    market: str = "MKT", cs_intercept: bool = False) -> PricingMetrics:
    """A|α|、A|t|、#sign2、Total R²、CS R²"""
    model, targets = tuple(model), tuple(targets)
    _check_targets(panel, model, targets, market)
    fit = ols_with_intercept(panel.columns(targets), panel.columns(model), model)
    params = fit_pricing(panel, model, targets, market, cs_intercept)
    total_r2, cs_r2 = _r2_pair(panel, model, targets, market, params)
    abs_t = np.abs(fit.alpha_t)
    return PricingMetrics(
        avg_abs_alpha=PERCENT * float(np.mean(np.abs(fit.alphas))),
        avg_abs_t=float(np.mean(abs_t)),
        n_sign2=int(np.sum(abs_t > T_CUTOFF)),
        total_r2=total_r2,
        cs_r2=cs_r2,
        n_assets=len(targets),
    )


def benchmark_alpha(series: np.ndarray, panel: ReturnPanel, benchmark: Sequence[str]) -> BenchmarkAlpha:
    """组合收益对基准因子回归的截距（%）"""
    benchmark = tuple(benchmark)
    fit = ols_with_intercept(series, panel.columns(benchmark), benchmark)
    t_stat = float(fit.alpha_t[0])
    dof = panel.t_obs - len(benchmark) - 1
    return BenchmarkAlpha(PERCENT * float(fit.alphas[0]), t_stat, significance_stars(t_stat, dof))


def investment_metrics(panel: ReturnPanel, model: Sequence[str],
                       benchmarks: Optional[Dict[str, Sequence[str]]] = None,
                       target_vol: float = DEFAULT_TARGET_VOL,
                       annualization: int = DEFAULT_ANNUALIZATION) -> InvestMetrics:
    """切点组合的平均收益、年化夏普与基准 alpha"""
    model = tuple(model)
    weights = tangency_weights(moments(panel, model), target_vol)
    series = portfolio_returns(weights, panel.columns(model))
    alphas = {name: benchmark_alpha(series, panel, bench)
              for name, bench in (benchmarks or {}).items()}
    return InvestMetrics(
        avg_return=PERCENT * float(series.mean()),
        ann_sharpe=float(annualize_sharpe(realized_sharpe(series), annualization)),
        benchmark_alphas=alphas,
        weights={n: float(w) for n, w in zip(model, weights)},
    )


# ==================== 样本外 ====================

@dataclass(frozen=True)
class OosConfig:
    """样本外评价配置"""
    market: str = "MKT"
    cs_intercept: bool = False
    target_vol: float = DEFAULT_TARGET_VOL
    annualization: int = DEFAULT_ANNUALIZATION
    selection: SelectionConfig = SelectionConfig()


def oos_evaluate(panel: ReturnPanel, folds: FoldSplit,
                 model: Optional[Sequence[str]] = None,
                 baseline: Optional[Sequence[str]] = None,
                 cfg: Optional[OosConfig] = None,
                 targets: Optional[Sequence[str]] = None) -> List[OosFoldReport]:
    """逐折: 在补集上训练，在该折上用冻结参数评价

    Pass ``model`` for a fixed model, or ``baseline`` to re-run stepwise
    selection on every training sample.
    """
    cfg = cfg or OosConfig()
    if (model is None) == (baseline is None):
        raise PreconditionError("pass exactly one of a fixed model or a reselection baseline")
    if folds.k < 2:
        raise PreconditionError("out-of-sample evaluation needs at least 2 folds")
    if folds.t_obs != panel.t_obs:
        raise PreconditionError(f"folds cover {folds.t_obs} periods, panel has {panel.t_obs}")

    reports = []
    for f in range(folds.k):
        train = _rows(panel, folds.train_indices(f))
        test = _rows(panel, folds.test_indices(f))
        if model is not None:
            fold_model = tuple(model)
        else:
            fold_model = stepwise_select(train, baseline, cfg=cfg.selection).model
            logger.info(f"OOS fold {f + 1}: reselected {','.join(fold_model)}")
        if train.t_obs <= len(fold_model) + 2:
            raise PreconditionError(
                f"training sample of fold {f + 1} has {train.t_obs} periods, "
                f"too short for a {len(fold_model)}-factor model"
            )
        fold_targets = tuple(targets) if targets is not None else \
            tuple(n for n in panel.names if n not in fold_model)

        ins_pricing = pricing_metrics(train, fold_model, fold_targets, cfg.market, cfg.cs_intercept)
        ins_invest = investment_metrics(train, fold_model, None, cfg.target_vol, cfg.annualization)
        params = fit_pricing(train, fold_model, fold_targets, cfg.market, cfg.cs_intercept)
        oos_total, oos_cs = _r2_pair(test, fold_model, fold_targets, cfg.market, params)

        weights = np.array([ins_invest.weights[n] for n in fold_model])
        series = portfolio_returns(weights, test.columns(fold_model))
        reports.append(OosFoldReport(
            fold=f + 1,
            model=fold_model,
            train_size=train.t_obs,
            test_size=test.t_obs,
            ins_pricing=ins_pricing,
            ins_invest=ins_invest,
            oos_total_r2=oos_total,
            oos_cs_r2=oos_cs,
            oos_ann_sharpe=float(annualize_sharpe(realized_sharpe(series), cfg.annualization)),
            oos_avg_return=PERCENT * float(series.mean()),
        ))
    return reports
