"""模拟校准文件

JSON with ``mu1`` (K1), ``sigma1`` (K1×K1), ``beta`` (K1×K2) and either
``sigma2`` (K2×K2) or ``sigma2_diag`` (K2 residual variances).
"""
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from ..core.errors import ConfigError, DataError
from ..utils.json_serializer import deserialize_calibration
from ..utils.log_manager import get_logger

logger = get_logger()

# 随包校准，相对 src/
DEFAULT_CALIBRATION = Path(__file__).resolve().parent.parent / "resources" / "default_calibration.json"


@dataclass(frozen=True, eq=False)
class Calibration:
    """校准参数"""
    mu1: np.ndarray
    sigma1: np.ndarray
    beta: np.ndarray
    sigma2: np.ndarray
    factors: Tuple[str, ...] = ()
    description: str = ""

    @property
    def k1(self) -> int:
        return self.mu1.shape[0]

    @property
    def k2(self) -> int:
        return self.beta.shape[1]


def load_calibration(path: str) -> Calibration:
    source = Path(path)
    if not source.exists():
        raise DataError(f"no such file: {path}")
    try:
        payload = deserialize_calibration(source.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"calibration {path} is not valid JSON: {e}")
    cal = Calibration(**payload)
    logger.debug(f"Loaded calibration {path}: K1={cal.k1}, K2={cal.k2}")
    return cal


def default_calibration() -> Calibration:
    """随包提供的 FF5 风格校准"""
    return load_calibration(str(DEFAULT_CALIBRATION))


def resolve_calibration(path: Optional[str]) -> Calibration:
    return load_calibration(path) if path else default_calibration()
