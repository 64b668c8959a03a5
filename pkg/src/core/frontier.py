"""均值-方差前沿核心计算

Sample moments (divisor T), maximal squared Sharpe ratios, spanning
regressions and tangency portfolios. Every function is pure and works on
immutable inputs, so callers may fan candidate models out to worker threads.
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import linalg, stats

from .errors import (
    CollinearModelError,
    PreconditionError,
    SingularCovarianceError,
    ZeroMeanError,
)
from .models import Moments, ReturnPanel, SpanningFit

# 最小特征值 / 最大特征值 低于该值视为奇异
SINGULAR_RATIO = 1e-10
# 残差方差相对阈值，判定 LHS 被精确张成
SPAN_VAR_RATIO = 1e-14
SPAN_ALPHA_RATIO = 1e-7
FLAT_RTOL = 1e-14

DEFAULT_TARGET_VOL = 0.045
DEFAULT_ANNUALIZATION = 12


# ==================== 矩与逆 ====================

def moments_from_array(returns: np.ndarray, names: Sequence[str] = ()) -> Moments:
    """T×m 收益矩阵的样本矩"""
    x = np.asarray(returns, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    t_obs = x.shape[0]
    if t_obs < 2:
        raise PreconditionError(f"moments need T >= 2, got {t_obs}")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / t_obs
    return Moments(mean, (cov + cov.T) / 2.0, t_obs, tuple(names))


def moments(panel: ReturnPanel, names: Optional[Sequence[str]] = None) -> Moments:
    """面板（或其子集）的样本矩，协方差除数为 T"""
    names = tuple(panel.names) if names is None else tuple(names)
    return moments_from_array(panel.columns(names), names)


def _eigen(cov: np.ndarray, label: str = "") -> Tuple[np.ndarray, np.ndarray]:
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    values, vectors = linalg.eigh(cov)
    largest = values[-1]
    smallest = values[0]
    if largest <= 0 or smallest < SINGULAR_RATIO * largest:
        cond = np.inf if smallest <= 0 else largest / smallest
        raise SingularCovarianceError(cond, label)
    return values, vectors


def condition_number(cov: np.ndarray) -> float:
    values = linalg.eigvalsh(np.atleast_2d(cov))
    if values[0] <= 0:
        return float("inf")
    return float(values[-1] / values[0])


def solve_psd(cov: np.ndarray, rhs: np.ndarray, label: str = "") -> np.ndarray:
    """对称分解求解 cov·x = rhs，奇异时抛出 SingularCovarianceError"""
    values, vectors = _eigen(cov, label)
    return vectors @ ((vectors.T @ rhs) / (values if np.ndim(rhs) == 1 else values[:, None]))


# ==================== 夏普比率 ====================

def max_sq_sharpe(m: Moments) -> float:
    """SR² = μᵀΣ⁻¹μ（每期单位），空集合为 0"""
    if m.mean.size == 0:
        return 0.0
    if not np.any(m.mean):
        _eigen(m.cov, ",".join(m.names))
        return 0.0
    x = solve_psd(m.cov, m.mean, ",".join(m.names))
    return max(float(m.mean @ x), 0.0)


def annualize_sr2(sr2: float, periods: int = DEFAULT_ANNUALIZATION) -> float:
    return sr2 * periods


def annualize_sharpe(sr: float, periods: int = DEFAULT_ANNUALIZATION) -> float:
    return sr * np.sqrt(periods)


def realized_sharpe(series: np.ndarray) -> float:
    """每期夏普比率（标准差除数 T）"""
    series = np.asarray(series, dtype=float)
    mean = series.mean()
    sd = series.std()
    # 常数序列的舍入噪声视为零方差
    if sd <= FLAT_RTOL * max(abs(mean), np.finfo(float).tiny):
        return 0.0
    return float(mean / sd)


# ==================== 回归 ====================

@dataclass(frozen=True)
class OlsFit:
    """带截距 OLS 的结果（每列一个 LHS 资产）"""
    alphas: np.ndarray
    betas: np.ndarray
    residuals: np.ndarray
    resid_cov: np.ndarray
    alpha_t: np.ndarray
    spanned: np.ndarray
    degenerate: np.ndarray


def ols_with_intercept(y: np.ndarray, x: np.ndarray, names: Sequence[str] = ()) -> OlsFit:
    """逐列时间序列 OLS: y = α + xβ + ε

    resid_cov uses divisor T; alpha t-statistics use s² with divisor T-K-1.
    Columns the regressors reproduce exactly (negligible residual variance and
    alpha) are flagged ``spanned`` and get t-statistic 0.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    t_obs, k = x.shape
    if y.shape[0] != t_obs:
        raise PreconditionError("lhs and rhs must have the same number of periods")
    if t_obs <= k + 1:
        raise PreconditionError(f"need T > K + 1, got T={t_obs}, K={k}")

    design = np.column_stack([np.ones(t_obs), x])
    rank = np.linalg.matrix_rank(design)
    if rank < k + 1:
        raise CollinearModelError(rank, k + 1, names)

    coef, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    residuals = y - design @ coef
    resid_cov = residuals.T @ residuals / t_obs
    resid_cov = (resid_cov + resid_cov.T) / 2.0

    alphas = coef[0]
    betas = coef[1:]
    xtx_inv00 = np.linalg.solve(design.T @ design, np.eye(k + 1)[0])[0]
    s2 = np.sum(residuals ** 2, axis=0) / (t_obs - k - 1)

    mean_sq = np.mean(y ** 2, axis=0)
    degenerate = np.diag(resid_cov) <= SPAN_VAR_RATIO * mean_sq
    spanned = degenerate & (np.abs(alphas) <= SPAN_ALPHA_RATIO * np.sqrt(mean_sq))

    with np.errstate(divide="ignore", invalid="ignore"):
        alpha_t = alphas / np.sqrt(s2 * xtx_inv00)
    alpha_t = np.where(spanned, 0.0, alpha_t)
    alpha_t = np.where(degenerate & ~spanned, np.sign(alphas) * np.inf, alpha_t)
    alphas = np.where(spanned, 0.0, alphas)

    return OlsFit(alphas, betas, residuals, resid_cov, alpha_t, spanned, degenerate)


def spanning_regression(panel: ReturnPanel, lhs: Sequence[str], rhs: Sequence[str]) -> SpanningFit:
    """LHS 资产对 RHS 模型的 spanning 回归"""
    lhs, rhs = tuple(lhs), tuple(rhs)
    if not rhs:
        raise PreconditionError("rhs model must be nonempty")
    if not lhs:
        raise PreconditionError("lhs must name at least one asset")
    overlap = set(lhs) & set(rhs)
    if overlap:
        raise PreconditionError(f"lhs and rhs overlap: {', '.join(sorted(overlap))}")
    fit = ols_with_intercept(panel.columns(lhs), panel.columns(rhs), rhs)
    return SpanningFit(
        alphas=fit.alphas,
        betas=fit.betas,
        resid_cov=fit.resid_cov,
        alpha_t=fit.alpha_t,
        rhs=rhs,
        lhs=lhs,
        t_obs=panel.t_obs,
        spanned=fit.spanned,
    )


def alpha_quadratic(fit: SpanningFit) -> float:
    """α̂ᵀ Σ̂ε⁻¹ α̂"""
    if not np.any(fit.alphas):
        return 0.0
    x = solve_psd(fit.resid_cov, fit.alphas, "residual covariance")
    return float(fit.alphas @ x)


# ==================== 切点组合 ====================

def tangency_weights(m: Moments, target_vol: float = DEFAULT_TARGET_VOL) -> np.ndarray:
    """w ∝ Σ⁻¹μ，缩放到事前每期波动率 target_vol"""
    if target_vol <= 0:
        raise PreconditionError(f"target_vol must be positive, got {target_vol}")
    if not np.any(m.mean):
        raise ZeroMeanError()
    raw = solve_psd(m.cov, m.mean, ",".join(m.names))
    vol = np.sqrt(raw @ m.cov @ raw)
    return raw * (target_vol / vol)


def portfolio_returns(weights: np.ndarray, returns: np.ndarray) -> np.ndarray:
    """组合收益序列 wᵀF_t"""
    return np.asarray(returns, dtype=float) @ np.asarray(weights, dtype=float)


# ==================== 显示 ====================

def significance_stars(t_stat: float, dof: Optional[int] = None) -> str:
    """双侧 10%/5%/1% 显著性星号"""
    if not np.isfinite(t_stat):
        return "***" if not np.isnan(t_stat) else ""
    if dof is None:
        p = 2.0 * stats.norm.sf(abs(t_stat))
    else:
        p = 2.0 * stats.t.sf(abs(t_stat), dof)
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.10:
        return "*"
    return ""
