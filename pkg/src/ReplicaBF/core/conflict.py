"""先验-数据冲突 p 值

混合先验的 p 值以混合指示变量 V 为条件：
P = ψ·(1 − G₁(z_o²)) + (1 − ψ)·(1 − G₁(z_o²/(1+h)))，G₁ 为自由度 1 的卡方分布函数。
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from ReplicaBF.core.kernel import Bracket, DomainError, chi2_1_sf
from ReplicaBF.models.study import MixtureHyperparams


@dataclass(frozen=True)
class ConflictGrid:
    """(h, ψ) 平面上的 p 值网格，p_values[i, j] 对应 h_values[i] 与 psi_values[j]"""

    z_o: float
    h_values: np.ndarray
    psi_values: np.ndarray
    p_values: np.ndarray

    def __post_init__(self):
        if self.p_values.shape != (len(self.h_values), len(self.psi_values)):
            raise DomainError(
                f"网格形状 {self.p_values.shape} 与坐标轴长度 ({len(self.h_values)}, {len(self.psi_values)}) 不符"
            )

    def to_frame(self) -> pd.DataFrame:
        """长格式表格，列为 z_o, h, psi, p_value"""
        h, psi = np.meshgrid(self.h_values, self.psi_values, indexing="ij")
        return pd.DataFrame(
            {
                "z_o": self.z_o,
                "h": h.ravel(),
                "psi": psi.ravel(),
                "p_value": self.p_values.ravel(),
            }
        )


def conditional_pvalues(z_o, h):
    """分别以 V=0（点质量）与 V=1（连续分量）为条件的 p 值"""
    h = np.asarray(h, dtype=float)
    if np.any(h <= 0):
        raise DomainError(f"相对方差 h 必须为正，收到 {h}")
    z2 = float(z_o) ** 2
    return chi2_1_sf(z2), chi2_1_sf(z2 / (1 + h))


def pdc_pvalue_array(z_o, psi, h):
    """向量化的 P(z_o; ψ, h)"""
    p_point, p_slab = conditional_pvalues(z_o, h)
    psi = np.asarray(psi, dtype=float)
    return np.clip(psi * p_point + (1 - psi) * p_slab, 0.0, 1.0)


def pdc_pvalue(z_o: float, hp: MixtureHyperparams) -> float:
    return float(pdc_pvalue_array(z_o, hp.psi, hp.h))


def pdc_pvalue_skeptical(z_o: float, g: float) -> float:
    """纯怀疑先验 N(0, gσ_o²) 的冲突 p 值；g = g_S 时即 P_S"""
    if g <= 0:
        raise DomainError(f"相对方差 g 必须为正，收到 {g}")
    return float(chi2_1_sf(z_o**2 / (1 + g)))


def conflict_grid(z_o: float, h_range: Bracket, psi_range: Bracket, resolution: int) -> ConflictGrid:
    """在矩形区域上稠密计算 P，供下游绘制等高线"""
    if resolution < 2:
        raise DomainError(f"分辨率至少为 2，收到 {resolution}")
    if h_range.lo <= 0:
        raise DomainError(f"h 区间必须为正，收到 [{h_range.lo}, {h_range.hi}]")
    if psi_range.lo < 0 or psi_range.hi > 1:
        raise DomainError(f"ψ 区间必须在 [0, 1] 内，收到 [{psi_range.lo}, {psi_range.hi}]")

    h_values = np.linspace(h_range.lo, h_range.hi, resolution)
    psi_values = np.linspace(psi_range.lo, psi_range.hi, resolution)
    p_values = pdc_pvalue_array(z_o, psi_values[np.newaxis, :], h_values[:, np.newaxis])
    return ConflictGrid(z_o=float(z_o), h_values=h_values, psi_values=psi_values, p_values=p_values)
