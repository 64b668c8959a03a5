"""JSON 序列化工具函数"""
import json
from dataclasses import fields
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..core.errors import ConfigError
from ..core.models import (
    BootstrapReport,
    FactorVerdict,
    InvestMetrics,
    OosFoldReport,
    PricingMetrics,
    RunConfig,
    RunManifest,
    SelectionPath,
    SimReport,
    StepRecord,
    TestResult,
)


def _camel(name: str) -> str:
    head, *rest = name.split("_")
    return head + "".join(part.capitalize() for part in rest)


def json_number(value: Any) -> Any:
    """非有限浮点写成 null，numpy 标量转为 Python 类型"""
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if np.isfinite(value) else None
    return value


def _array(values: np.ndarray) -> List[Any]:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        return [json_number(v) for v in arr]
    return [_array(row) for row in arr]


def dumps(data: Any) -> str:
    return json.dumps(data, ensure_ascii=False, indent=2, allow_nan=False)


# ==================== 运行配置 ====================

def serialize_run_config(config: RunConfig) -> Dict[str, Any]:
    """序列化运行配置（camelCase 键）"""
    return {_camel(f.name): getattr(config, f.name) for f in fields(RunConfig)}


def deserialize_run_config(data: Dict[str, Any]) -> RunConfig:
    """反序列化运行配置，未知键忽略"""
    lookup = {_camel(f.name): f.name for f in fields(RunConfig)}
    kwargs = {}
    for key, value in data.items():
        name = lookup.get(key, key if key in lookup.values() else None)
        if name is not None:
            kwargs[name] = value
    return RunConfig(**kwargs)


# ==================== 结果 ====================

def serialize_test_result(result: Optional[TestResult]) -> Optional[Dict[str, Any]]:
    if result is None:
        return None
    return {
        "name": result.name,
        "statistic": json_number(result.statistic),
        "p_value": json_number(result.p_value),
        "df": result.df,
        "n_lhs": result.n_lhs,
        "level": result.level,
        "rejected": bool(result.rejected),
    }


def serialize_step(record: StepRecord) -> Dict[str, Any]:
    return {
        "step": record.step,
        "action": record.action.value,
        "factor": record.factor,
        "model_size": record.model_size,
        "grs": json_number(record.grs),
        "grs_p": json_number(record.grs_p),
        "sr2": json_number(record.sr2),
        "sr_ann": json_number(record.sr_ann),
        "hda_stat": json_number(record.hda_stat),
        "hda_p": json_number(record.hda_p),
        "rejected": bool(record.rejected),
        "stopped": bool(record.stopped),
    }


def serialize_path(path: SelectionPath) -> Dict[str, Any]:
    return {
        "model": list(path.model),
        "expanded_model": list(path.expanded_model),
        "converged": path.converged,
        "skipped": [{"step": s, "factor": f, "reason": r} for s, f, r in path.skipped],
        "steps": [serialize_step(r) for r in path.records],
    }


def serialize_pricing(metrics: PricingMetrics) -> Dict[str, Any]:
    return {
        "avg_abs_alpha": json_number(metrics.avg_abs_alpha),
        "avg_abs_t": json_number(metrics.avg_abs_t),
        "n_sign2": metrics.n_sign2,
        "total_r2": json_number(metrics.total_r2),
        "cs_r2": json_number(metrics.cs_r2),
        "n_assets": metrics.n_assets,
    }


def serialize_invest(metrics: InvestMetrics) -> Dict[str, Any]:
    return {
        "avg_return": json_number(metrics.avg_return),
        "ann_sharpe": json_number(metrics.ann_sharpe),
        "benchmark_alphas": {
            name: {"alpha": json_number(a.alpha), "t_stat": json_number(a.t_stat), "stars": a.stars}
            for name, a in metrics.benchmark_alphas.items()
        },
        "weights": {name: json_number(w) for name, w in metrics.weights.items()},
    }


def serialize_oos_fold(report: OosFoldReport) -> Dict[str, Any]:
    return {
        "fold": report.fold,
        "model": list(report.model),
        "train_size": report.train_size,
        "test_size": report.test_size,
        "ins_pricing": serialize_pricing(report.ins_pricing),
        "ins_invest": serialize_invest(report.ins_invest),
        "oos_total_r2": json_number(report.oos_total_r2),
        "oos_cs_r2": json_number(report.oos_cs_r2),
        "oos_ann_sharpe": json_number(report.oos_ann_sharpe),
        "oos_avg_return": json_number(report.oos_avg_return),
    }


def serialize_bootstrap(report: BootstrapReport) -> Dict[str, Any]:
    return {
        "models": list(report.model_names),
        "runs": report.runs,
        "seed": report.seed,
        "redraws": report.redraws,
        "mean_ins_sr2": _array(report.mean_ins_sr2),
        "mean_oos_sr2": _array(report.mean_oos_sr2),
        "beat_ins": _array(report.beat_ins),
        "beat_oos": _array(report.beat_oos),
        "tie_ins": _array(report.tie_ins),
        "tie_oos": _array(report.tie_oos),
        "best_ins": _array(report.best_ins),
        "best_oos": _array(report.best_oos),
    }


def serialize_sim_report(report: SimReport) -> Dict[str, Any]:
    return {
        "replications": report.replications,
        "failures": report.failures,
        "rows": [
            {
                "method": row.method,
                "mean_size": json_number(row.mean_size),
                "cp": json_number(row.cp),
                "cf": json_number(row.cf),
                "tr": json_number(row.tr),
                "fr": json_number(row.fr),
                "replications": row.replications,
                "failures": row.failures,
            }
            for row in report.rows
        ],
        "factors": list(report.factor_names),
        "selection_rates": {k: [json_number(v) for v in vals] for k, vals in report.selection_rates.items()},
    }


def serialize_verdicts(verdicts: Sequence[FactorVerdict], rates: Dict[str, float]) -> List[Dict[str, Any]]:
    return [
        {
            "factor": v.factor,
            "selected": v.selected,
            "same": v.same,
            "rate": json_number(rates.get(v.factor, 0.0)),
            "final_model": list(v.final_model),
        }
        for v in verdicts
    ]


def serialize_manifest(manifest: RunManifest) -> str:
    data = {
        "version": manifest.version,
        "command": manifest.command,
        "argv": manifest.argv,
        "config": manifest.config,
        "inputDigests": manifest.input_digests,
        "seed": manifest.seed,
        "startedAt": manifest.started_at,
        "wallClockSeconds": manifest.wall_clock_seconds,
        "outputs": manifest.outputs,
        "issues": manifest.issues,
    }
    return dumps(data)


def deserialize_manifest(json_str: str) -> RunManifest:
    data = json.loads(json_str)
    return RunManifest(
        version=data.get("version", ""),
        command=data.get("command", ""),
        argv=data.get("argv", []),
        config=data.get("config", {}),
        input_digests=data.get("inputDigests", {}),
        seed=data.get("seed"),
        started_at=data.get("startedAt", ""),
        wall_clock_seconds=data.get("wallClockSeconds", 0.0),
        outputs=data.get("outputs", []),
        issues=data.get("issues", []),
    )


# ==================== 校准 ====================

def deserialize_calibration(json_str: str) -> Dict[str, Any]:
    """校准 JSON -> Calibration 构造参数"""
    data = json.loads(json_str)
    missing = [k for k in ("mu1", "sigma1", "beta") if k not in data]
    if "sigma2" not in data and "sigma2_diag" not in data:
        missing.append("sigma2")
    if missing:
        raise ConfigError(f"calibration is missing {', '.join(missing)}")
    try:
        mu1 = np.asarray(data["mu1"], dtype=float)
        sigma1 = np.asarray(data["sigma1"], dtype=float)
        beta = np.asarray(data["beta"], dtype=float)
        if "sigma2" in data:
            sigma2 = np.asarray(data["sigma2"], dtype=float)
        else:
            sigma2 = np.diag(np.asarray(data["sigma2_diag"], dtype=float))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"calibration arrays are malformed: {e}")
    k1 = mu1.shape[0] if mu1.ndim == 1 else -1
    if (k1 < 1 or sigma1.shape != (k1, k1) or beta.ndim != 2 or beta.shape[0] != k1
            or sigma2.shape != (beta.shape[1], beta.shape[1])):
        raise ConfigError("calibration dimensions are inconsistent")
    return {
        "mu1": mu1,
        "sigma1": sigma1,
        "beta": beta,
        "sigma2": sigma2,
        "factors": tuple(data.get("factors", ())),
        "description": data.get("description", ""),
    }
