"""Core data models - 核心数据模型

This module defines the data models shared by every layer: return panels,
moments, regression fits, test verdicts, selection paths and report records.
Models are dataclasses; numeric payloads are read-only numpy arrays so a value
can be handed to parallel workers without copying.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    DataError,
    DuplicateNameError,
    ErrorType,
    PeriodMismatchError,
    PreconditionError,
    UnknownNameError,
)

__all__ = [
    "ErrorType", "StopRule", "Criterion", "StepAction", "SelectionMode",
    "ReturnPanel", "CostSchedule", "FoldSplit", "Moments", "SpanningFit",
    "TestResult", "HdaConfig", "Rho2Estimate", "StepRecord", "SelectionConfig",
    "SelectionPath", "FactorVerdict", "PricingMetrics", "BenchmarkAlpha",
    "InvestMetrics", "OosFoldReport", "BootstrapReport", "SimConfig",
    "MethodScore", "SimReport", "RunConfig", "RunManifest", "ErrorItem",
]


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


class StopRule(Enum):
    """停止规则"""
    HDA = "hda"
    GRS = "grs"


class Criterion(Enum):
    """候选因子排序准则"""
    MODEL_SR2 = "model-sr2"
    SINGLE_SR2 = "single-sr2"


class StepAction(Enum):
    """路径动作"""
    BASELINE = "baseline"
    ADD = "add"
    REMOVE = "remove"


class SelectionMode(Enum):
    """选择流程"""
    FULL = "full"
    FSE_ONLY = "fse-only"
    BSE_ONLY = "bse-only"


# ==================== 面板 ====================

@dataclass(frozen=True, eq=False)
class ReturnPanel:
    """收益面板 - T×N matrix of periodic excess returns

    periods 是有序的期间标签，names 是唯一的资产/因子标识。
    """
    periods: Tuple[str, ...]
    names: Tuple[str, ...]
    returns: np.ndarray

    def __post_init__(self):
        periods = tuple(str(p) for p in self.periods)
        names = tuple(str(n) for n in self.names)
        returns = np.asarray(self.returns, dtype=float)
        if returns.ndim != 2:
            raise DataError(f"returns must be a matrix, got {returns.ndim} dimensions")
        if any(not n.strip() for n in names):
            raise DataError("factor names must be nonempty")
        seen, dupes = set(), []
        for n in names:
            if n in seen and n not in dupes:
                dupes.append(n)
            seen.add(n)
        if dupes:
            raise DuplicateNameError(dupes)
        if returns.shape != (len(periods), len(names)):
            raise DataError(
                f"returns shape {returns.shape} does not match "
                f"{len(periods)} periods x {len(names)} names"
            )
        if not np.all(np.isfinite(returns)):
            raise DataError("returns contain non-finite entries")
        object.__setattr__(self, "periods", periods)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "returns", _frozen(returns))

    @property
    def t_obs(self) -> int:
        return self.returns.shape[0]

    @property
    def n_assets(self) -> int:
        return self.returns.shape[1]

    def index_of(self, names: Sequence[str]) -> List[int]:
        """名称 -> 列位置"""
        lookup = {n: i for i, n in enumerate(self.names)}
        missing = [n for n in names if n not in lookup]
        if missing:
            raise UnknownNameError(missing)
        return [lookup[n] for n in names]

    def columns(self, names: Sequence[str]) -> np.ndarray:
        """返回 T×k 子矩阵"""
        return self.returns[:, self.index_of(names)]

    def column(self, name: str) -> np.ndarray:
        return self.returns[:, self.index_of([name])[0]]

    def to_frame(self):
        import pandas as pd
        return pd.DataFrame(self.returns, index=list(self.periods), columns=list(self.names))

    def join(self, other: "ReturnPanel") -> "ReturnPanel":
        """按列拼接（期间必须一致，名称不得重复）"""
        if self.periods != other.periods:
            raise PeriodMismatchError("panels cover different periods and cannot be joined")
        return ReturnPanel(self.periods, self.names + other.names,
                           np.hstack([self.returns, other.returns]))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ReturnPanel):
            return NotImplemented
        return (self.periods == other.periods and
                self.names == other.names and
                np.array_equal(self.returns, other.returns))

    __hash__ = None


@dataclass(frozen=True)
class CostSchedule:
    """单边交易成本（基点/期）"""
    costs: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for name, bps in self.costs.items():
            bps = float(bps)
            if not np.isfinite(bps) or bps < 0:
                raise DataError(f"cost for {name!r} must be a finite value >= 0, got {bps}")
            clean[str(name)] = bps
        object.__setattr__(self, "costs", clean)

    def get(self, name: str) -> float:
        return self.costs.get(name, 0.0)

    def __add__(self, other: "CostSchedule") -> "CostSchedule":
        merged = dict(self.costs)
        for name, bps in other.costs.items():
            merged[name] = merged.get(name, 0.0) + bps
        return CostSchedule(merged)

    @classmethod
    def from_rebalancing(
        cls,
        names_by_frequency: Dict[str, Sequence[str]],
        bps_by_frequency: Dict[str, float],
    ) -> "CostSchedule":
        """按调仓频率构造成本表，例如 {"monthly": 12, "annual": 0, "none": 0}"""
        costs: Dict[str, float] = {}
        for freq, names in names_by_frequency.items():
            if freq not in bps_by_frequency:
                raise DataError(f"no cost given for rebalancing frequency {freq!r}")
            for name in names:
                costs[name] = float(bps_by_frequency[freq])
        return cls(costs)


@dataclass(frozen=True)
class FoldSplit:
    """连续、互不相交、覆盖全部期间的折"""
    folds: Tuple[Tuple[int, ...], ...]
    t_obs: int

    def __post_init__(self):
        folds = tuple(tuple(int(i) for i in f) for f in self.folds)
        flat = [i for f in folds for i in f]
        if sorted(flat) != list(range(self.t_obs)) or len(flat) != self.t_obs:
            raise DataError("folds must partition the period positions")
        for f in folds:
            if not f or list(f) != list(range(f[0], f[0] + len(f))):
                raise DataError("folds must be nonempty and contiguous")
        object.__setattr__(self, "folds", folds)

    @property
    def k(self) -> int:
        return len(self.folds)

    @property
    def sizes(self) -> List[int]:
        return [len(f) for f in self.folds]

    def test_indices(self, fold: int) -> np.ndarray:
        return np.array(self.folds[fold], dtype=int)

    def train_indices(self, fold: int) -> np.ndarray:
        held = set(self.folds[fold])
        return np.array([i for i in range(self.t_obs) if i not in held], dtype=int)


# ==================== 均值-方差 ====================

@dataclass(frozen=True, eq=False)
class Moments:
    """样本矩（除数 T）"""
    mean: np.ndarray
    cov: np.ndarray
    t_obs: int
    names: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "mean", _frozen(self.mean))
        object.__setattr__(self, "cov", _frozen(self.cov))
        object.__setattr__(self, "names", tuple(self.names))

    def take(self, indices: Sequence[int]) -> "Moments":
        """按位置切片"""
        idx = list(indices)
        names = tuple(self.names[i] for i in idx) if self.names else ()
        return Moments(self.mean[idx], self.cov[np.ix_(idx, idx)], self.t_obs, names)


@dataclass(frozen=True, eq=False)
class SpanningFit:
    """Spanning regression of LHS assets on an RHS model

    alphas / alpha_t: length-N1; betas: K×N1; resid_cov: N1×N1 (divisor T).
    spanned marks LHS assets the RHS reproduces exactly.
    """
    alphas: np.ndarray
    betas: np.ndarray
    resid_cov: np.ndarray
    alpha_t: np.ndarray
    rhs: Tuple[str, ...]
    lhs: Tuple[str, ...]
    t_obs: int
    spanned: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def __post_init__(self):
        for name in ("alphas", "betas", "resid_cov", "alpha_t"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        spanned = self.spanned if len(self.spanned) else np.zeros(len(self.lhs), dtype=bool)
        object.__setattr__(self, "spanned", _frozen(spanned, dtype=bool))
        object.__setattr__(self, "rhs", tuple(self.rhs))
        object.__setattr__(self, "lhs", tuple(self.lhs))

    @property
    def n_lhs(self) -> int:
        return len(self.lhs)


# ==================== 资产定价检验 ====================

@dataclass(frozen=True)
class TestResult:
    """检验结论"""
    name: str
    statistic: float
    p_value: float
    df: str
    n_lhs: int
    level: float = 0.05
    rejected: bool = False

    __test__ = False  # not a pytest class


@dataclass(frozen=True)
class HdaConfig:
    """HDA 检验配置

    screen_level 为相关系数筛选的单对显著性水平，None 表示默认 2/(N1(N1-1))。
    extra_in_universe 控制额外测试资产是否进入 SR²{F} 与 GRS 的 N。
    """
    significance: float = 0.05
    screen_level: Optional[float] = None
    extra_in_universe: bool = True

    def __post_init__(self):
        if not 0.0 < self.significance < 1.0:
            raise PreconditionError(f"significance must lie in (0, 1), got {self.significance}")
        if self.screen_level is not None and not 0.0 < self.screen_level <= 1.0:
            raise PreconditionError(f"screen_level must lie in (0, 1], got {self.screen_level}")


@dataclass(frozen=True)
class Rho2Estimate:
    value: float
    retained_pairs: int
    threshold: float = 0.0


# ==================== 逐步选择 ====================

@dataclass(frozen=True)
class StepRecord:
    """路径中的一步"""
    step: int
    action: StepAction
    factor: str
    grs: float
    grs_p: float
    sr2: float
    sr_ann: float
    hda_stat: float
    hda_p: float
    model_size: int
    rejected: bool
    stopped: bool = False


@dataclass(frozen=True)
class SelectionConfig:
    """FSE/BSE 配置"""
    significance: float = 0.05
    stop_rule: StopRule = StopRule.HDA
    criterion: Criterion = Criterion.MODEL_SR2
    max_steps: Optional[int] = None
    mode: SelectionMode = SelectionMode.FULL
    tie_break: str = "lexicographic"
    screen_level: Optional[float] = None
    extra_in_universe: bool = True
    annualization: int = 12
    threads: int = 1

    def __post_init__(self):
        if not 0.0 < self.significance < 1.0:
            raise PreconditionError(f"significance must lie in (0, 1), got {self.significance}")
        if self.max_steps is not None and self.max_steps < 1:
            raise PreconditionError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.tie_break != "lexicographic":
            raise PreconditionError(f"unsupported tie_break {self.tie_break!r}")

    @property
    def hda(self) -> HdaConfig:
        return HdaConfig(self.significance, self.screen_level, self.extra_in_universe)

    @property
    def label(self) -> str:
        """方法标签: HDA / GRS / SR"""
        if self.criterion is Criterion.SINGLE_SR2:
            return "SR"
        return self.stop_rule.value.upper()


@dataclass(frozen=True)
class SelectionPath:
    """FSE/BSE 路径，可解包为 (model, records)"""
    model: Tuple[str, ...]
    records: Tuple[StepRecord, ...]
    expanded_model: Tuple[str, ...] = ()
    converged: bool = True
    skipped: Tuple[Tuple[int, str, str], ...] = ()

    def __iter__(self) -> Iterator:
        yield self.model
        yield list(self.records)


@dataclass(frozen=True)
class FactorVerdict:
    factor: str
    selected: bool
    final_model: Tuple[str, ...]
    same: Optional[bool] = None


# ==================== 评价 ====================

@dataclass(frozen=True)
class PricingMetrics:
    """定价指标（% 单位）"""
    avg_abs_alpha: float
    avg_abs_t: float
    n_sign2: int
    total_r2: float
    cs_r2: float
    n_assets: int


@dataclass(frozen=True)
class BenchmarkAlpha:
    alpha: float
    t_stat: float
    stars: str = ""


@dataclass(frozen=True)
class InvestMetrics:
    avg_return: float
    ann_sharpe: float
    benchmark_alphas: Dict[str, BenchmarkAlpha] = field(default_factory=dict)
    weights: Dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class OosFoldReport:
    fold: int
    model: Tuple[str, ...]
    train_size: int
    test_size: int
    ins_pricing: PricingMetrics
    ins_invest: InvestMetrics
    oos_total_r2: float
    oos_cs_r2: float
    oos_ann_sharpe: float
    oos_avg_return: float


@dataclass(frozen=True, eq=False)
class BootstrapReport:
    """bootstrap 比较结果，beat 矩阵单位为 %"""
    model_names: Tuple[str, ...]
    mean_ins_sr2: np.ndarray
    mean_oos_sr2: np.ndarray
    beat_ins: np.ndarray
    beat_oos: np.ndarray
    tie_ins: np.ndarray
    tie_oos: np.ndarray
    best_ins: np.ndarray
    best_oos: np.ndarray
    runs: int
    seed: int
    redraws: int = 0

    def __post_init__(self):
        for name in ("mean_ins_sr2", "mean_oos_sr2", "beat_ins", "beat_oos",
                     "tie_ins", "tie_oos", "best_ins", "best_oos"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))


# ==================== 模拟 ====================

@dataclass(frozen=True, eq=False)
class SimConfig:
    """Monte Carlo 数据生成配置"""
    k1: int
    k2: int
    t_obs: int
    mu1: np.ndarray
    sigma1: np.ndarray
    beta: np.ndarray
    sigma2: np.ndarray
    baseline_case: int = 1
    seed: int = 0

    def __post_init__(self):
        mu1 = np.asarray(self.mu1, dtype=float)
        sigma1 = np.asarray(self.sigma1, dtype=float)
        beta = np.asarray(self.beta, dtype=float)
        sigma2 = np.asarray(self.sigma2, dtype=float)
        if self.k1 < 1 or self.k2 < 2:
            raise PreconditionError("need k1 >= 1 and k2 >= 2")
        if mu1.shape != (self.k1,) or sigma1.shape != (self.k1, self.k1):
            raise PreconditionError("mu1/sigma1 dimensions do not match k1")
        if beta.shape != (self.k1, self.k2) or sigma2.shape != (self.k2, self.k2):
            raise PreconditionError("beta/sigma2 dimensions do not match (k1, k2)")
        if not (np.allclose(sigma1, sigma1.T) and np.allclose(sigma2, sigma2.T)):
            raise PreconditionError("sigma1 and sigma2 must be symmetric")
        if self.baseline_case not in (1, 2):
            raise PreconditionError(f"baseline_case must be 1 or 2, got {self.baseline_case}")
        if self.t_obs < self.k1 + self.k2 + 2:
            raise PreconditionError("t_obs must exceed k1 + k2 + 1")
        for name, value in (("mu1", mu1), ("sigma1", sigma1), ("beta", beta), ("sigma2", sigma2)):
            object.__setattr__(self, name, _frozen(value))

    @classmethod
    def from_calibration(cls, cal, k2: Optional[int] = None, t_obs: int = 3000,
                         case: int = 1, seed: int = 0) -> "SimConfig":
        """由校准构造，k2 小于校准宽度时截取前 k2 个非风险因子"""
        full_k2 = cal.beta.shape[1]
        k2 = full_k2 if k2 is None else k2
        if not 2 <= k2 <= full_k2:
            raise PreconditionError(f"k2 must lie in [2, {full_k2}] for this calibration, got {k2}")
        return cls(
            k1=cal.mu1.shape[0],
            k2=k2,
            t_obs=t_obs,
            mu1=cal.mu1,
            sigma1=cal.sigma1,
            beta=cal.beta[:, :k2],
            sigma2=cal.sigma2[:k2, :k2],
            baseline_case=case,
            seed=seed,
        )

    @property
    def names(self) -> Tuple[str, ...]:
        width = max(3, len(str(self.k1 + self.k2)))
        return tuple(f"f{i:0{width}d}" for i in range(1, self.k1 + self.k2 + 1))

    @property
    def truth(self) -> Tuple[str, ...]:
        return self.names[:self.k1]

    @property
    def baseline(self) -> Tuple[str, ...]:
        """Case 1: 第一个风险因子; Case 2: 再加第一个非风险因子"""
        names = self.names
        if self.baseline_case == 1:
            return (names[0],)
        return (names[0], names[self.k1])


@dataclass(frozen=True)
class MethodScore:
    """一种方法在一个阶段上的选择精度"""
    label: str
    stage: str
    mean_size: float
    cp: float
    cf: float
    tr: float
    fr: float
    replications: int
    failures: int = 0

    @property
    def method(self) -> str:
        return f"{self.stage}({self.label})"


@dataclass(frozen=True)
class SimReport:
    rows: Tuple[MethodScore, ...]
    factor_names: Tuple[str, ...]
    selection_rates: Dict[str, Tuple[float, ...]]
    replications: int
    failures: int = 0

    def row(self, method: str) -> MethodScore:
        for r in self.rows:
            if r.method == method:
                return r
        raise KeyError(method)


# ==================== 运行配置 ====================

@dataclass
class RunConfig:
    """命令行运行配置"""
    data: str = ""
    assets: str = ""
    costs: str = ""
    periods_file: str = ""
    period_from: str = ""
    period_to: str = ""
    baseline: str = "MKT"
    model: List[str] = field(default_factory=list)
    alpha_level: float = 0.05
    stop: str = "hda"
    criterion: str = "model-sr2"
    mode: str = "full"
    max_steps: int = 0
    screen_level: float = 0.0
    market: str = "MKT"
    targets: str = "unselected"
    benchmarks: str = ""
    reference: str = ""
    cs_intercept: bool = False
    folds: int = 3
    reselect: bool = False
    models_file: str = ""
    runs: int = 1000
    reps: int = 1000
    methods: str = "hda,grs,sr"
    case: int = 1
    k2: int = 100
    t_obs: int = 3000
    calibration: str = ""
    annualization: int = 12
    target_vol: float = 0.045
    out: str = "results"
    seed: Optional[int] = None
    threads: int = 0
    log_level: str = "INFO"
    log_file: bool = True

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RunConfig):
            return NotImplemented
        return self.__dict__ == other.__dict__


@dataclass
class RunManifest:
    """产物目录清单"""
    version: str
    command: str
    argv: List[str]
    config: Dict[str, object]
    input_digests: Dict[str, str]
    seed: Optional[int]
    started_at: str
    wall_clock_seconds: float
    outputs: List[str] = field(default_factory=list)
    issues: List[str] = field(default_factory=list)


@dataclass
class ErrorItem:
    """非致命问题记录（跳过的候选、失败的复制等）"""
    error_type: ErrorType
    message: str
    timestamp: float
    retryable: bool = False
    context: str = ""
