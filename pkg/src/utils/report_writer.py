"""报告输出: CSV 表格与 JSON

CSVs carry no timestamps and print floats with a fixed ``%.10g`` so repeat
runs are byte-identical. Table layouts follow the usual published tables:
one row per step, model, fold or method.
"""
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..core.models import (
    BootstrapReport,
    OosFoldReport,
    PricingMetrics,
    InvestMetrics,
    SelectionPath,
    SimReport,
)
from .json_serializer import dumps

FLOAT_FORMAT = "%.10g"


def write_csv(frame: pd.DataFrame, path: Path, index: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=index, float_format=FLOAT_FORMAT, lineterminator="\n", na_rep="")
    return path


def write_json(data: Any, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(data) + "\n", encoding="utf-8")
    return path


# ==================== 表格 ====================

def path_frame(path: SelectionPath) -> pd.DataFrame:
    """逐步路径表"""
    stage = []
    seen_remove = False
    for r in path.records:
        seen_remove = seen_remove or r.action.value == "remove"
        stage.append("BSE" if seen_remove else "FSE")
    return pd.DataFrame({
        "stage": stage,
        "step": [r.step for r in path.records],
        "action": [r.action.value for r in path.records],
        "factor": [r.factor for r in path.records],
        "model_size": [r.model_size for r in path.records],
        "grs": [r.grs for r in path.records],
        "grs_p": [r.grs_p for r in path.records],
        "sr2": [r.sr2 for r in path.records],
        "sr_ann": [r.sr_ann for r in path.records],
        "hda": [r.hda_stat for r in path.records],
        "hda_p": [r.hda_p for r in path.records],
        "rejected": [int(r.rejected) for r in path.records],
        "stopped": [int(r.stopped) for r in path.records],
    })


def tests_frame(rows: Sequence[Any]) -> pd.DataFrame:
    """基准模型检验表: model, #M, GRS, p_GRS, HDA, p_HDA"""
    nan = float("nan")
    return pd.DataFrame({
        "model": [r.name for r in rows],
        "size": [len(r.model) for r in rows],
        "sr2": [r.sr2 for r in rows],
        "grs": [r.grs.statistic if r.grs else nan for r in rows],
        "grs_p": [r.grs.p_value if r.grs else nan for r in rows],
        "hda": [r.hda.statistic if r.hda else nan for r in rows],
        "hda_p": [r.hda.p_value if r.hda else nan for r in rows],
        "n_lhs": [r.hda.n_lhs if r.hda else 0 for r in rows],
    })


def metrics_frame(rows: Sequence[Tuple[str, str, PricingMetrics, Optional[InvestMetrics]]]) -> pd.DataFrame:
    """定价/投资指标表，每个 (模型, 目标资产组) 一行"""
    records: List[Dict[str, Any]] = []
    for model, label, m, invest in rows:
        record = {
            "model": model,
            "targets": label,
            "n_assets": m.n_assets,
            "avg_abs_alpha": m.avg_abs_alpha,
            "avg_abs_t": m.avg_abs_t,
            "n_sign2": m.n_sign2,
            "total_r2": m.total_r2,
            "cs_r2": m.cs_r2,
        }
        if invest is not None:
            record["avg"] = invest.avg_return
            record["ann_sr"] = invest.ann_sharpe
            for name, a in invest.benchmark_alphas.items():
                record[f"alpha_{name}"] = a.alpha
                record[f"t_{name}"] = a.t_stat
                record[f"stars_{name}"] = a.stars
        records.append(record)
    return pd.DataFrame.from_records(records)


def oos_frame(reports: Sequence[OosFoldReport]) -> pd.DataFrame:
    return pd.DataFrame({
        "fold": [r.fold for r in reports],
        "model": [",".join(r.model) for r in reports],
        "train_size": [r.train_size for r in reports],
        "test_size": [r.test_size for r in reports],
        "ins_avg_abs_alpha": [r.ins_pricing.avg_abs_alpha for r in reports],
        "ins_avg_abs_t": [r.ins_pricing.avg_abs_t for r in reports],
        "ins_n_sign2": [r.ins_pricing.n_sign2 for r in reports],
        "ins_total_r2": [r.ins_pricing.total_r2 for r in reports],
        "ins_cs_r2": [r.ins_pricing.cs_r2 for r in reports],
        "ins_avg": [r.ins_invest.avg_return for r in reports],
        "ins_ann_sr": [r.ins_invest.ann_sharpe for r in reports],
        "oos_total_r2": [r.oos_total_r2 for r in reports],
        "oos_cs_r2": [r.oos_cs_r2 for r in reports],
        "oos_avg": [r.oos_avg_return for r in reports],
        "oos_ann_sr": [r.oos_ann_sharpe for r in reports],
    })


def bootstrap_frame(report: BootstrapReport, sample: str) -> pd.DataFrame:
    """INS 或 OOS 的胜率矩阵，附均值 SR² 与最优频率列"""
    if sample == "ins":
        beat, mean, best = report.beat_ins, report.mean_ins_sr2, report.best_ins
    else:
        beat, mean, best = report.beat_oos, report.mean_oos_sr2, report.best_oos
    frame = pd.DataFrame(np.asarray(beat), columns=list(report.model_names))
    frame.insert(0, "model", list(report.model_names))
    frame["mean_sr2"] = mean
    frame["best"] = best
    return frame


def simulation_frame(report: SimReport) -> pd.DataFrame:
    return pd.DataFrame({
        "method": [r.method for r in report.rows],
        "mean_size": [r.mean_size for r in report.rows],
        "cp": [r.cp for r in report.rows],
        "cf": [r.cf for r in report.rows],
        "tr": [r.tr for r in report.rows],
        "fr": [r.fr for r in report.rows],
        "replications": [r.replications for r in report.rows],
        "failures": [r.failures for r in report.rows],
    })


def selection_rates_frame(report: SimReport) -> pd.DataFrame:
    frame = pd.DataFrame(report.selection_rates, index=list(report.factor_names))
    frame.index.name = "factor"
    return frame.reset_index()


def factor_eval_frame(table) -> pd.DataFrame:
    """Selected / Same / Rate 表"""
    return pd.DataFrame({
        "factor": [v.factor for v in table.verdicts],
        "selected": [int(v.selected) for v in table.verdicts],
        "same": ["" if v.same is None else int(v.same) for v in table.verdicts],
        "rate": [table.rates[v.factor] for v in table.verdicts],
        "final_size": [len(v.final_model) for v in table.verdicts],
        "final_model": [",".join(v.final_model) for v in table.verdicts],
    })
