"""研究表格的读取与 StudyPair 构造

CSV 为唯一输入格式（UTF-8、逗号分隔、必须有表头）。两种列布局：
- correlation: label, r_o, r_r, n_o, n_r，经 Fisher 变换得到效应与标准误
- zstat: label, z_o, z_r, c；缺少 c 时由 n_o, n_r 按 (n_r − 3)/(n_o − 3) 推出
"""

from __future__ import annotations

import math
from collections.abc import Iterable
from pathlib import Path

from loguru import logger
from pydantic import ValidationError

import pandas as pd

from ReplicaBF.core.kernel import DomainError
from ReplicaBF.models.study import RawStudyRecord, StudyMode, StudyPair

CORRELATION_COLUMNS = ("label", "r_o", "r_r", "n_o", "n_r")
ZSTAT_COLUMNS = ("label", "z_o", "z_r")
_INT_COLUMNS = frozenset({"n_o", "n_r"})
_FLOAT_COLUMNS = frozenset({"r_o", "r_r", "z_o", "z_r", "c"})


class StudyValidationError(ValueError):
    """研究记录校验失败；row 为从 1 开始的数据行号，文件级问题为 None"""

    def __init__(self, message: str, row: int | None = None, fields: Iterable[str] = ()):
        self.row = row
        self.fields = tuple(fields)
        location = f"第 {row} 行" if row is not None else "文件"
        detail = f" [{', '.join(self.fields)}]" if self.fields else ""
        super().__init__(f"{location}{detail}: {message}")
        self.reason = message


class EmptyInputError(StudyValidationError):
    def __init__(self, path: Path):
        super().__init__(f"empty input: {path} 中没有数据行")


def fisher_transform(r: float, n: int) -> tuple[float, float]:
    """相关系数的 Fisher z 变换：θ̂ = atanh(r)，σ = 1/√(n − 3)"""
    if not -1 < r < 1:
        raise DomainError(f"相关系数必须在 (−1, 1) 内，收到 {r}")
    if n < 4:
        raise DomainError(f"样本量至少为 4，收到 {n}")
    return math.atanh(r), 1 / math.sqrt(n - 3)


def _detect_mode(columns: set[str]) -> StudyMode:
    if set(CORRELATION_COLUMNS) <= columns:
        return StudyMode.CORRELATION
    if set(ZSTAT_COLUMNS) <= columns and ("c" in columns or {"n_o", "n_r"} <= columns):
        return StudyMode.ZSTAT

    missing_corr = [name for name in CORRELATION_COLUMNS if name not in columns]
    missing_z = [name for name in (*ZSTAT_COLUMNS, "c") if name not in columns]
    missing = missing_z if len(missing_z) <= len(missing_corr) else missing_corr
    raise StudyValidationError("缺少必需的列", fields=missing)


def _parse_cell(column: str, text: str, row: int) -> float | int | None:
    text = text.strip()
    if not text:
        return None
    try:
        value = float(text)
    except ValueError:
        raise StudyValidationError(f"无法解析数值 {text!r}", row=row, fields=[column]) from None
    if column in _INT_COLUMNS:
        if not value.is_integer():
            raise StudyValidationError(f"样本量必须为整数，收到 {text!r}", row=row, fields=[column])
        return int(value)
    return value


def load_studies(path: Path | str, format: str = "csv") -> list[RawStudyRecord]:
    """读取研究表格，每个数据行对应一条记录"""
    if format != "csv":
        raise StudyValidationError(f"不支持的格式 {format!r}，仅支持 csv")
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"找不到输入文件: {path}")

    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise EmptyInputError(path) from None
    if frame.empty:
        raise EmptyInputError(path)

    frame.columns = [str(name).strip() for name in frame.columns]
    mode = _detect_mode(set(frame.columns))
    known = {"label"} | _INT_COLUMNS | _FLOAT_COLUMNS
    records: list[RawStudyRecord] = []
    for index, raw in enumerate(frame.to_dict(orient="records"), start=1):
        fields: dict[str, object] = {"label": str(raw["label"]).strip(), "mode": mode}
        for column, text in raw.items():
            if column in known and column != "label":
                fields[column] = _parse_cell(column, str(text), index)
        try:
            records.append(RawStudyRecord.model_validate(fields))
        except ValidationError as e:
            offending = [str(err["loc"][0]) for err in e.errors() if err["loc"]] or ["mode"]
            messages = "; ".join(err["msg"] for err in e.errors())
            raise StudyValidationError(messages, row=index, fields=offending) from e

    logger.debug(f"从 {path} 读取 {len(records)} 条 {mode.display_name} 记录")
    return records


def build_study(record: RawStudyRecord) -> StudyPair:
    """由原始记录构造 StudyPair；zstat 模式约定 σ_r = 1"""
    try:
        if record.mode is StudyMode.CORRELATION:
            assert record.r_o is not None and record.r_r is not None
            assert record.n_o is not None and record.n_r is not None
            theta_o, sigma_o = fisher_transform(record.r_o, record.n_o)
            theta_r, sigma_r = fisher_transform(record.r_r, record.n_r)
            if theta_o == 0:
                raise StudyValidationError("原始效应为 0，相对效应 d 无定义", fields=["r_o"])
            return StudyPair.from_estimates(theta_o, sigma_o, theta_r, sigma_r, label=record.label)

        assert record.z_o is not None and record.z_r is not None
        if record.z_o == 0:
            raise StudyValidationError("z_o 为 0，相对效应 d 无定义", fields=["z_o"])
        if record.c is not None:
            c = record.c
        else:
            assert record.n_o is not None and record.n_r is not None
            c = (record.n_r - 3) / (record.n_o - 3)
        return StudyPair.from_zstat(record.z_o, record.z_r, c, label=record.label)
    except (ValidationError, DomainError) as e:
        fields = ("r_o", "r_r", "n_o", "n_r") if record.mode is StudyMode.CORRELATION else ("z_o", "z_r", "c")
        raise StudyValidationError(str(e), fields=fields) from e


def load_study_pairs(path: Path | str) -> list[StudyPair]:
    """读取并构造全部研究，构造错误附带行号"""
    pairs = []
    for row, record in enumerate(load_studies(path), start=1):
        try:
            pairs.append(build_study(record))
        except StudyValidationError as e:
            raise StudyValidationError(e.reason, row=row, fields=e.fields) from e
    return pairs
