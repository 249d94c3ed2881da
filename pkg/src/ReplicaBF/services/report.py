"""分析报告的三种输出格式：文本表格、JSON Lines 与 CSV

文本表格的舍入规则：
- 相对方差 g_S、h 与 z、c、d 保留 2 位小数
- BF_S、BF_SM、p 值与 ψ 保留 3 位小数，BF_R 保留 2 位
- 末尾的 0 被去掉；小于 0.001 的 p 值、ψ 与 BF_R 记为 "<0.001"；不存在记为 "-"
"""

from __future__ import annotations

import io
import math
from collections.abc import Iterable, Sequence

import pandas as pd

from ReplicaBF.consts import NONEXISTENT_MARK, TINY_MARK, TINY_THRESHOLD
from ReplicaBF.models.config import OutputFormat
from ReplicaBF.services.analysis import AnalysisReport

TABLE_COLUMNS = ("Study", "z_o", "z_r", "c", "d", "g_S", "P_S", "P_SM", "psi", "h", "BF_S", "BF_R", "BF_SM")
CSV_COLUMNS = (
    "label",
    "z_o",
    "z_r",
    "c",
    "d",
    "bf_r",
    "bf_r_evidence",
    "bf_s",
    "bf_s_evidence",
    "g_s",
    "p_s",
    "alpha",
    "status",
    "bf_sm",
    "bf_sm_evidence",
    "psi",
    "h",
    "p_realized",
)
DIAGNOSTIC_COLUMNS = ("binding", "dual_root_residual", "bf_sm_binding")
_DIAGNOSTIC_EXCLUDE = {"binding": True, "dual_root_residual": True, "mixtures": {"__all__": {"binding"}}}


def format_value(value: float | None, decimals: int, tiny: bool = False) -> str:
    """按表格规则格式化单个数值"""
    if value is None or not math.isfinite(value):
        return NONEXISTENT_MARK
    if tiny and abs(value) < TINY_THRESHOLD:
        return TINY_MARK
    text = f"{value:.{decimals}f}"
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return "0" if text == "-0" else text


def _table_row(report: AnalysisReport, alpha: float, diagnostics: bool) -> dict[str, str]:
    mix = report.mixture_at(alpha)
    row = {
        "Study": report.label,
        "z_o": format_value(report.z_o, 2),
        "z_r": format_value(report.z_r, 2),
        "c": format_value(report.c, 2),
        "d": format_value(report.d, 2),
        "g_S": format_value(report.g_s, 2),
        "P_S": format_value(report.p_s, 3, tiny=True),
        "P_SM": format_value(mix.p_realized, 3, tiny=True),
        "psi": format_value(mix.psi, 3, tiny=True),
        "h": format_value(mix.h, 2),
        "BF_S": format_value(report.bf_s, 3),
        "BF_R": format_value(report.bf_r, 2, tiny=True),
        "BF_SM": format_value(mix.bf_sm, 3),
    }
    if diagnostics:
        row["status"] = mix.status.value
        row["binding"] = NONEXISTENT_MARK if report.binding is None else str(report.binding).lower()
        row["dual_res"] = NONEXISTENT_MARK if report.dual_root_residual is None else f"{report.dual_root_residual:.2e}"
    return row


def render_table(reports: Sequence[AnalysisReport], alphas: Sequence[float], diagnostics: bool = False) -> str:
    """按 α 分块的文本表格"""
    blocks = []
    for alpha in alphas:
        frame = pd.DataFrame([_table_row(report, alpha, diagnostics) for report in reports])
        if frame.empty:
            frame = pd.DataFrame(columns=list(TABLE_COLUMNS))
        blocks.append(f"alpha = {format_value(alpha, 3)}\n{frame.to_string(index=False)}")
    return "\n\n".join(blocks) + "\n"


def render_jsonl(reports: Iterable[AnalysisReport], diagnostics: bool = False) -> str:
    """每行一个报告；不带诊断信息时省略边界标志与双根残差"""
    exclude = None if diagnostics else _DIAGNOSTIC_EXCLUDE
    return "".join(report.model_dump_json(exclude=exclude) + "\n" for report in reports)  # type: ignore[arg-type]


def reports_to_frame(reports: Iterable[AnalysisReport], diagnostics: bool = False) -> pd.DataFrame:
    """长格式表格，每个 (研究, α) 一行"""
    rows = []
    for report in reports:
        for mix in report.mixtures:
            row = {
                "label": report.label,
                "z_o": report.z_o,
                "z_r": report.z_r,
                "c": report.c,
                "d": report.d,
                "bf_r": report.bf_r,
                "bf_r_evidence": report.bf_r_evidence.value,
                "bf_s": report.bf_s,
                "bf_s_evidence": report.bf_s_evidence.value if report.bf_s_evidence else None,
                "g_s": report.g_s,
                "p_s": report.p_s,
                "alpha": mix.alpha,
                "status": mix.status.value,
                "bf_sm": mix.bf_sm,
                "bf_sm_evidence": mix.evidence.value if mix.evidence else None,
                "psi": mix.psi,
                "h": mix.h,
                "p_realized": mix.p_realized,
            }
            if diagnostics:
                row["binding"] = report.binding
                row["dual_root_residual"] = report.dual_root_residual
                row["bf_sm_binding"] = mix.binding
            rows.append(row)
    columns = list(CSV_COLUMNS) + (list(DIAGNOSTIC_COLUMNS) if diagnostics else [])
    return pd.DataFrame(rows, columns=columns)


def frame_to_csv(frame: pd.DataFrame) -> str:
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


def render_reports(
    reports: Sequence[AnalysisReport], alphas: Sequence[float], fmt: OutputFormat, diagnostics: bool = False
) -> str:
    if fmt is OutputFormat.TEXT:
        return render_table(reports, alphas, diagnostics)
    if fmt is OutputFormat.JSONL:
        return render_jsonl(reports, diagnostics)
    return frame_to_csv(reports_to_frame(reports, diagnostics))
