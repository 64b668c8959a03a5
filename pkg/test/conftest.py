"""Pytest 配置和共享 fixtures

提供测试所需的通用配置、随机面板与构造面板 fixtures。
"""
import sys
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import pytest

# 添加项目根目录到 Python 路径
PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from src.core.models import ReturnPanel, SimConfig  # noqa: E402
from src.data.panel_loader import write_panel  # noqa: E402


# ==================== pytest 配置 ====================

def pytest_configure(config):
    """pytest 配置钩子"""
    config.addinivalue_line("markers", "unit: 单元测试")
    config.addinivalue_line("markers", "integration: 集成测试")
    config.addinivalue_line("markers", "slow: 慢速测试")


def pytest_collection_modifyitems(config, items):
    """修改测试收集"""
    for item in items:
        # 自动标记测试类型
        if "integration" in item.nodeid or "test_cli" in item.nodeid:
            item.add_marker(pytest.mark.integration)
        else:
            item.add_marker(pytest.mark.unit)


# ==================== 面板构造 ====================

def periods_for(t_obs: int) -> tuple:
    return tuple(f"p{t:05d}" for t in range(1, t_obs + 1))


def random_panel(rng: np.random.Generator, t_obs: int, n: int,
                 names: Optional[Sequence[str]] = None) -> ReturnPanel:
    """i.i.d. 正态收益，随机正定协方差"""
    names = tuple(names) if names is not None else ("MKT",) + tuple(f"F{i:02d}" for i in range(1, n))
    a = rng.standard_normal((n, n))
    cov = 0.0004 * (a @ a.T / n + 0.5 * np.eye(n))
    mu = rng.uniform(-0.002, 0.008, size=n)
    returns = mu + rng.standard_normal((t_obs, n)) @ np.linalg.cholesky(cov).T
    return ReturnPanel(periods_for(t_obs), names, returns)


def orthonormal_scores(rng: np.random.Generator, t_obs: int, k: int) -> np.ndarray:
    """k 列样本均值为 0、样本方差（除数 T）为 1、两两样本正交的序列"""
    raw = np.column_stack([np.ones(t_obs), rng.standard_normal((t_obs, k))])
    q, _ = np.linalg.qr(raw)
    return q[:, 1:] * np.sqrt(t_obs)


# 非真实因子: (名称, MKT 载荷, A 载荷)
PLANTED_LOADINGS = (
    ("C1", 0.5, 0.0),
    ("C2", 0.3, 0.5),
    ("C3", 0.0, 0.0),
    ("C4", 0.2, 0.3),
    ("C5", 0.4, 0.0),
)


def build_planted_panel(t_obs: int = 1200, seed: int = 11) -> ReturnPanel:
    """真实模型为 {MKT, A, B} 的构造面板

    Scores are exactly orthogonal in sample, so every non-true column has a
    sample alpha of exactly zero against any model containing MKT, A and B.
    Per-period SR²: MKT 0.04, A 0.25, B 0.0625; NOISE has mean exactly 0.
    """
    rng = np.random.default_rng(seed)
    z = orthonormal_scores(rng, t_obs, 4 + len(PLANTED_LOADINGS))
    mkt = 0.008 + 0.04 * z[:, 0]
    a = 0.010 + 0.02 * z[:, 1]
    b = 0.005 + 0.02 * z[:, 2]
    noise = 0.03 * z[:, 3]
    columns = [mkt, a, b]
    names = ["MKT", "A", "B"]
    for j, (name, load_m, load_a) in enumerate(PLANTED_LOADINGS):
        columns.append(load_m * mkt + load_a * a + 0.03 * z[:, 4 + j])
        names.append(name)
    columns.append(noise)
    names.append("NOISE")
    return ReturnPanel(periods_for(t_obs), tuple(names), np.column_stack(columns))


def small_sim_config(t_obs: int = 600, k2: int = 4, case: int = 1, seed: int = 5) -> SimConfig:
    """两个强风险因子 + k2 个非风险因子"""
    beta = np.tile(np.array([[0.4], [0.2]]), (1, k2))
    beta[:, 1::2] *= -1.0
    return SimConfig(
        k1=2,
        k2=k2,
        t_obs=t_obs,
        mu1=np.array([0.010, 0.008]),
        sigma1=np.array([[0.0016, 0.0002], [0.0002, 0.0009]]),
        beta=beta,
        sigma2=0.0009 * np.eye(k2),
        baseline_case=case,
        seed=seed,
    )


# ==================== Fixtures ====================

@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def planted_panel() -> ReturnPanel:
    return build_planted_panel()


@pytest.fixture
def sim_config() -> SimConfig:
    return small_sim_config()


@pytest.fixture
def write_csv(tmp_path) -> Callable[[str, str], Path]:
    """把文本写到临时 CSV，返回路径"""
    def _write(name: str, text: str) -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return _write


@pytest.fixture
def panel_csv(tmp_path, planted_panel) -> Path:
    """构造面板写出为 CSV"""
    return write_panel(planted_panel, str(tmp_path / "factors.csv"))
