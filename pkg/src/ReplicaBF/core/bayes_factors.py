"""闭式贝叶斯因子

log_* 函数在对数尺度上计算，接受 numpy 数组，供网格与模拟使用；
其余为带参数检查的标量版本。记号：z_o、z_r 为 z 值，c = σ_o²/σ_r²，d = θ̂_r/θ̂_o。
BF_{0:S} 的闭式由正态-正态边际似然之比自行推出：√(1+g)·exp(−z_o²g/(2(1+g)))。
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ReplicaBF.core.kernel import DomainError
from ReplicaBF.models.config import InformativeEnum
from ReplicaBF.models.study import MixtureHyperparams, StudyPair


class EvidenceLabel(InformativeEnum):
    FAVORS_NULL = ("favors-null", "支持零假设或无证据")
    ANECDOTAL = ("anecdotal", "轶事性证据")
    MODERATE = ("moderate", "中等证据")
    STRONG = ("strong", "强证据")
    VERY_STRONG = ("very-strong", "非常强证据")


@dataclass(frozen=True)
class EvidenceClass:
    label: EvidenceLabel
    lower: float
    upper: float


# (label, lower, upper, upper 是否闭合)
_EVIDENCE_BRACKETS: tuple[tuple[EvidenceLabel, float, float, bool], ...] = (
    (EvidenceLabel.VERY_STRONG, 0.0, 1 / 30, True),
    (EvidenceLabel.STRONG, 1 / 30, 1 / 10, True),
    (EvidenceLabel.MODERATE, 1 / 10, 1 / 3, True),
    (EvidenceLabel.ANECDOTAL, 1 / 3, 1.0, False),
    (EvidenceLabel.FAVORS_NULL, 1.0, math.inf, False),
)


def _check_variance(name: str, value) -> None:
    if np.any(np.asarray(value) <= 0):
        raise DomainError(f"{name} 必须为正，收到 {value}")


# ── 对数尺度（向量化）──────────────────────────────────────────────────


def log_bf_replication(z_o, c, d):
    """log BF_R = ½log(1+c) − (z_o²/2)(d²c − (1−d)²/(1/c+1))"""
    z_o, c, d = np.asarray(z_o, float), np.asarray(c, float), np.asarray(d, float)
    return 0.5 * np.log1p(c) - 0.5 * z_o**2 * (d**2 * c - (1 - d) ** 2 / (1 / c + 1))


def log_bf_zero_vs_skeptical(z_o, g):
    """log BF_{0:S} = ½log(1+g) − z_o²g/(2(1+g))"""
    z_o, g = np.asarray(z_o, float), np.asarray(g, float)
    return 0.5 * np.log1p(g) - 0.5 * z_o**2 * g / (1 + g)


def log_bf_skeptical_vs_advocate(z_o, c, d, g):
    """log BF_{S:A}，怀疑先验 N(0, gσ_o²) 对倡导者先验 N(θ̂_o, σ_o²)"""
    z_o, c, d, g = (np.asarray(v, float) for v in (z_o, c, d, g))
    inv_c = 1 / c
    return 0.5 * np.log((inv_c + 1) / (inv_c + g)) - 0.5 * z_o**2 * (d**2 / (inv_c + g) - (d - 1) ** 2 / (inv_c + 1))


# exp 的有限正值范围，标量 BF 截断到其中
_LOG_TINY = math.log(float(np.finfo(float).tiny))
_LOG_HUGE = math.log(float(np.finfo(float).max)) - 1.0


def _scalar(value) -> float:
    return float(np.asarray(value))


def _exp_bf(log_bf) -> float:
    return math.exp(min(max(_scalar(log_bf), _LOG_TINY), _LOG_HUGE))


# ── 标量接口 ──────────────────────────────────────────────────────────


def bf_replication(study: StudyPair) -> float:
    """重复实验贝叶斯因子 BF_R：H_0 对倡导者先验，基于重复实验数据"""
    return _exp_bf(log_bf_replication(study.z_o, study.c, study.d))


def bf_zero_vs_skeptical(z_o: float, g: float) -> float:
    _check_variance("相对方差 g", g)
    return _exp_bf(log_bf_zero_vs_skeptical(z_o, g))


def bf_skeptical_vs_advocate(study: StudyPair, g: float) -> float:
    _check_variance("相对方差 g", g)
    return _exp_bf(log_bf_skeptical_vs_advocate(study.z_o, study.c, study.d, g))


def bf_zero_vs_mixture(z_o: float, hp: MixtureHyperparams) -> float:
    """BF_{0:SM} = 1 / (ψ + (1−ψ)/BF_{0:S}(h))，以 B/(ψB + 1 − ψ) 形式计算"""
    b = bf_zero_vs_skeptical(z_o, hp.h)
    return b / (hp.psi * b + (1 - hp.psi))


def bf_mixture_vs_advocate(study: StudyPair, hp: MixtureHyperparams) -> float:
    """BF_{SM:A} = ψ·BF_R + (1−ψ)·BF_{S:A}(h)"""
    if hp.psi == 1:
        return bf_replication(study)
    if hp.psi == 0:
        return bf_skeptical_vs_advocate(study, hp.h)
    return hp.psi * bf_replication(study) + (1 - hp.psi) * bf_skeptical_vs_advocate(study, hp.h)


def classify_evidence(bf: float) -> EvidenceClass:
    """按常用分级给出证据强度；区间边界归入更强的一级"""
    if not bf > 0:
        raise DomainError(f"贝叶斯因子必须为正，收到 {bf}")
    for label, lower, upper, upper_closed in _EVIDENCE_BRACKETS:
        if bf < upper or (upper_closed and bf == upper):
            return EvidenceClass(label, lower, upper)
    return EvidenceClass(EvidenceLabel.FAVORS_NULL, 1.0, math.inf)
