"""收益面板读写

CSV layout: UTF-8, comma-delimited by default, first column the period label,
header row of factor names, one row per period. Ingestion rejects rather than
imputes: every structural or numeric problem raises a distinct DataError.
Row numbers in errors are 1-based file lines.
"""
import re
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from ..core.errors import (
    DataError,
    DuplicateNameError,
    EmptyFileError,
    RaggedRowError,
    UnparseableNumberError,
)
from ..core.models import CostSchedule, ReturnPanel
from ..utils.log_manager import get_logger

logger = get_logger()

# %.17g round-trips every IEEE double exactly
DEFAULT_PRECISION = 17

# pandas 对多出字段的行报 "Expected 3 fields in line 4, saw 5"
_TOO_MANY_FIELDS = re.compile(r"Expected (\d+) fields in line (\d+), saw (\d+)")


@dataclass(frozen=True)
class PanelOptions:
    """CSV 读取选项"""
    delimiter: str = ","
    date_column: int = 0
    encoding: str = "utf-8"
    sort_periods: bool = True


def _read_table(path: Path, options: PanelOptions) -> pd.DataFrame:
    """读成字符串表，索引为文件行号，缺失字段为 NaN，空行丢弃"""
    try:
        table = pd.read_csv(path, sep=options.delimiter, header=None, dtype=str,
                            encoding=options.encoding, keep_default_na=False,
                            skip_blank_lines=False)
    except pd.errors.EmptyDataError:
        raise EmptyFileError(str(path))
    except pd.errors.ParserError as e:
        found = _TOO_MANY_FIELDS.search(str(e))
        if found is None:
            raise DataError(f"{path}: {e}")
        expected, line, seen = (int(g) for g in found.groups())
        raise RaggedRowError(line, expected, seen)

    table.index = table.index + 1
    first = table.iat[0, 0]
    if isinstance(first, str) and first.startswith("\ufeff"):
        table.iat[0, 0] = first[1:]
    blank = table.apply(lambda col: col.fillna("").str.strip() == "").all(axis=1)
    table = table[~blank]
    if table.empty:
        raise EmptyFileError(str(path))
    return table


def _check_width(table: pd.DataFrame, width: int) -> None:
    """缺字段的行报 RaggedRowError（多字段的行读取时已拒绝）"""
    short = table.isna().any(axis=1)
    if short.any():
        line = short.idxmax()
        raise RaggedRowError(int(line), width, int(table.loc[line].notna().sum()))


def load_panel(path: str, options: Optional[PanelOptions] = None) -> ReturnPanel:
    """读取收益面板

    Raises:
        EmptyFileError, DuplicateNameError, RaggedRowError, UnparseableNumberError
    """
    options = options or PanelOptions()
    source = Path(path)
    if not source.exists():
        raise DataError(f"no such file: {path}")
    table = _read_table(source, options)

    header = [cell.strip() for cell in table.iloc[0]]
    width = len(header)
    if width < 2:
        raise DataError(f"{path}: header needs a period column and at least one name")
    if len(table) < 2:
        raise EmptyFileError(str(path))

    date_col = options.date_column
    names = [h for i, h in enumerate(header) if i != date_col]
    seen, dupes = set(), []
    for n in names:
        if n in seen:
            dupes.append(n)
        seen.add(n)
    if dupes:
        raise DuplicateNameError(dupes)
    if any(not n for n in names):
        raise DataError(f"{path}: empty column name in header")

    frame = table.iloc[1:]
    _check_width(frame, width)
    frame = frame.set_axis(header, axis=1)
    periods = frame.iloc[:, date_col].str.strip()
    values = frame.drop(columns=frame.columns[date_col])

    stripped = values.apply(lambda col: col.str.strip())
    numeric = stripped.apply(lambda col: pd.to_numeric(col, errors="coerce"))
    bad = numeric.isna().to_numpy() | ~np.isfinite(numeric.to_numpy(dtype=float, na_value=np.nan))
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise UnparseableNumberError(int(values.index[r]), names[c], values.iat[r, c])
    # astype 逐项走 Python float 解析，%.17g 写出的值可逐位读回
    numeric = stripped.astype(float)

    if options.sort_periods:
        order = np.argsort(periods.to_numpy(), kind="stable")
        periods = periods.iloc[order]
        numeric = numeric.iloc[order]
    if periods.duplicated().any():
        raise DuplicateNameError(periods[periods.duplicated()].unique().tolist())

    panel = ReturnPanel(tuple(periods), tuple(names), numeric.to_numpy(dtype=float))
    logger.debug(f"Loaded panel {path}: T={panel.t_obs}, N={panel.n_assets}")
    return panel


def write_panel(panel: ReturnPanel, path: str, precision: int = DEFAULT_PRECISION,
                period_header: str = "date") -> Path:
    """写出面板，默认精度保证逐位往返"""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    frame = panel.to_frame()
    frame.index.name = period_header
    frame.to_csv(target, float_format=f"%.{precision}g", lineterminator="\n")
    return target


def load_cost_schedule(path: str) -> CostSchedule:
    """读取两列 name,bps 的成本表（表头可选）"""
    source = Path(path)
    if not source.exists():
        raise DataError(f"no such file: {path}")
    table = _read_table(source, PanelOptions())
    if table.shape[1] != 2:
        raise RaggedRowError(int(table.index[0]), 2, table.shape[1])
    _check_width(table, 2)
    costs = {}
    first_line = table.index[0]
    for line, (name, raw) in zip(table.index, table.itertuples(index=False)):
        name, raw = name.strip(), raw.strip()
        try:
            bps = float(raw)
        except ValueError:
            if line == first_line:
                continue  # header
            raise UnparseableNumberError(int(line), "bps", raw)
        if name in costs:
            raise DuplicateNameError([name])
        costs[name] = bps
    return CostSchedule(costs)


def load_period_list(path: str) -> List[str]:
    """读取期间列表（每行一个标签，取第一列）"""
    source = Path(path)
    if not source.exists():
        raise DataError(f"no such file: {path}")
    labels = _read_table(source, PanelOptions()).iloc[:, 0].fillna("").str.strip()
    return [label for label in labels if label]
