"""配置管理器实现

Precedence: command-line flag > environment variable ``FACTORSTEP_<FLAG>`` >
config file > built-in default. The config file is plain ``key = value``
text; ``#`` starts a comment, keys are flag names with ``-`` or ``_``::

    # factorstep.conf
    alpha-level = 0.05
    stop = hda
    threads = 4
"""
import os
from dataclasses import fields
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from ..core.errors import ConfigError
from ..core.models import RunConfig
from ..utils.log_manager import get_logger

logger = get_logger()

ENV_PREFIX = "FACTORSTEP_"
DEFAULT_CONFIG_NAME = "factorstep.conf"

# 旗标名与字段名不一致的情况
ALIASES = {
    "from": "period_from",
    "to": "period_to",
    "no_log_file": "log_file",
}
FLAG_NAMES = {v: k for k, v in ALIASES.items() if k != "no_log_file"}

BOOL_FIELDS = {"cs_intercept", "reselect", "log_file"}
INT_FIELDS = {"max_steps", "folds", "runs", "reps", "case", "k2", "t_obs", "annualization", "threads"}
FLOAT_FIELDS = {"alpha_level", "screen_level", "target_vol"}
LIST_FIELDS = {"model"}

CHOICES = {
    "stop": ("hda", "grs"),
    "criterion": ("model-sr2", "single-sr2"),
    "mode": ("full", "fse-only", "bse-only"),
    "log_level": ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"),
}

MAX_SEED = 2 ** 64 - 1


def flag_name(field_name: str) -> str:
    """字段名 -> 命令行旗标名"""
    return FLAG_NAMES.get(field_name, field_name).replace("_", "-")


def env_name(field_name: str) -> str:
    return ENV_PREFIX + flag_name(field_name).replace("-", "_").upper()


def _field_names():
    return {f.name for f in fields(RunConfig)}


def normalize_key(key: str) -> str:
    """配置键规范化为字段名"""
    name = key.strip().lstrip("-").replace("-", "_").lower()
    name = ALIASES.get(name, name)
    if name not in _field_names():
        raise ConfigError(f"unknown configuration key {key!r}")
    return name


def coerce(name: str, raw: Any) -> Any:
    """把文本值转换为字段类型"""
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if name in BOOL_FIELDS:
            lowered = text.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if name in INT_FIELDS:
            return int(text)
        if name in FLOAT_FIELDS:
            return float(text)
        if name == "seed":
            return int(text) if text else None
        if name in LIST_FIELDS:
            return [part.strip() for part in text.split("|") if part.strip()]
    except ValueError:
        raise ConfigError(f"invalid value {raw!r} for {flag_name(name)}")
    return text


def read_config_file(path: str) -> Dict[str, Any]:
    """读取 key = value 配置文件"""
    source = Path(path)
    if not source.exists():
        raise ConfigError(f"config file not found: {path}")
    values: Dict[str, Any] = {}
    for line_no, line in enumerate(source.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected 'key = value'")
        key, _, value = line.partition("=")
        name = normalize_key(key)
        values[name] = coerce(name, value)
    return values


class ConfigManager:
    """运行配置管理器"""

    def __init__(self, config_path: Optional[str] = None, env: Optional[Mapping[str, str]] = None):
        self._env = os.environ if env is None else env
        if config_path:
            self._config_path: Optional[Path] = Path(config_path)
        else:
            default = Path.cwd() / DEFAULT_CONFIG_NAME
            self._config_path = default if default.exists() else None
        self._file_values = read_config_file(str(self._config_path)) if self._config_path else {}

    @property
    def config_path(self) -> Optional[Path]:
        return self._config_path

    def env_values(self) -> Dict[str, Any]:
        values = {}
        for name in _field_names():
            key = env_name(name)
            if key in self._env:
                values[name] = coerce(name, self._env[key])
        return values

    def resolve(self, cli: Optional[Mapping[str, Any]] = None) -> RunConfig:
        """合并各层配置并校验"""
        merged: Dict[str, Any] = {}
        merged.update(self._file_values)
        merged.update(self.env_values())
        for key, value in (cli or {}).items():
            if value is None or (key in LIST_FIELDS and not value):
                continue
            merged[normalize_key(key)] = coerce(normalize_key(key), value)

        config = RunConfig(**merged)
        self.validate(config)
        defaults = RunConfig()
        for name in sorted(merged):
            if getattr(defaults, name) != getattr(config, name):
                logger.log_config_change(name, getattr(defaults, name), getattr(config, name))
        return config

    @staticmethod
    def validate(config: RunConfig) -> RunConfig:
        """校验取值范围"""
        def fail(name: str, message: str) -> None:
            raise ConfigError(f"--{flag_name(name)}: {message}")

        if not 0.0 < config.alpha_level < 1.0:
            fail("alpha_level", f"must lie in (0, 1), got {config.alpha_level}")
        if not 0.0 <= config.screen_level <= 1.0:
            fail("screen_level", f"must lie in [0, 1], got {config.screen_level}")
        for name, floor in (("folds", 2), ("runs", 1), ("reps", 1), ("k2", 2),
                            ("annualization", 1), ("threads", 0), ("max_steps", 0)):
            if getattr(config, name) < floor:
                fail(name, f"must be >= {floor}, got {getattr(config, name)}")
        if config.t_obs < 10:
            fail("t_obs", f"must be >= 10, got {config.t_obs}")
        if config.target_vol <= 0:
            fail("target_vol", f"must be positive, got {config.target_vol}")
        if config.case not in (1, 2):
            fail("case", f"must be 1 or 2, got {config.case}")
        if config.seed is not None and not 0 <= config.seed <= MAX_SEED:
            fail("seed", f"must be an unsigned 64-bit integer, got {config.seed}")
        config.log_level = config.log_level.upper()
        for name, allowed in CHOICES.items():
            if getattr(config, name) not in allowed:
                fail(name, f"must be one of {', '.join(allowed)}, got {getattr(config, name)!r}")
        return config
