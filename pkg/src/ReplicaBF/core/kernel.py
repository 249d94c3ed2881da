"""标量特殊函数与一维求解器

所有函数均为纯函数，可被任意线程同时调用。求根基于 scipy 的 Brent 方法，
本模块负责统一的容差、括号检查与异常语义。
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from ReplicaBF.models.config import SolverConfig

DEFAULT_SOLVER = SolverConfig()
_MIN_RTOL = 4 * float(np.finfo(float).eps)


class DomainError(ValueError):
    """参数超出定义域"""


class SolverError(RuntimeError):
    """数值求解失败"""


class NoRootInBracket(SolverError):
    def __init__(self, message: str, bracket: Bracket):
        super().__init__(message)
        self.bracket = bracket


class ConvergenceError(SolverError):
    def __init__(self, message: str, bracket: Bracket):
        super().__init__(message)
        self.bracket = bracket


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo < self.hi):
            raise DomainError(f"无效区间 [{self.lo}, {self.hi}]：要求 lo < hi")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)


# ── 分布函数 ──────────────────────────────────────────────────────────


def normal_pdf(x, mean=0.0, var=1.0):
    """正态密度 N(x; mean, var)，支持 numpy 数组"""
    if np.any(np.asarray(var) <= 0):
        raise DomainError(f"方差必须为正，收到 {var}")
    return np.exp(-0.5 * (x - mean) ** 2 / var) / np.sqrt(2 * np.pi * var)


def normal_cdf(x):
    """标准正态分布函数 Φ(x)"""
    return special.ndtr(x)


def chi2_1_sf(x):
    """自由度为 1 的卡方分布生存函数，按 2(1 − Φ(√x)) 计算"""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError(f"卡方统计量不能为负，收到 {x}")
    result = 2.0 * (1.0 - special.ndtr(np.sqrt(x)))
    return float(result) if result.ndim == 0 else result


# ── 一维求解器 ────────────────────────────────────────────────────────


def find_root(f: Callable[[float], float], bracket: Bracket, cfg: SolverConfig = DEFAULT_SOLVER) -> float:
    """在有变号的区间内求 f 的根。

    Parameters
    ----------
    f : callable
        区间上连续的标量函数。
    bracket : Bracket
        初始区间，两端函数值须异号（或其一为零）。
    cfg : SolverConfig
        容差与最大迭代次数。

    Returns
    -------
    float
        根的近似值，区间宽度低于容差。

    Raises
    ------
    NoRootInBracket
        两端函数值同号。
    ConvergenceError
        超过最大迭代次数，携带已知的最窄变号区间。
    """
    f_lo = f(bracket.lo)
    f_hi = f(bracket.hi)
    if f_lo == 0:
        return bracket.lo
    if f_hi == 0:
        return bracket.hi
    if math.isnan(f_lo) or math.isnan(f_hi) or (f_lo > 0) == (f_hi > 0):
        raise NoRootInBracket(f"区间 [{bracket.lo:.6g}, {bracket.hi:.6g}] 内无根：f 两端同号", bracket)

    best = [bracket.lo, bracket.hi]
    lo_positive = f_lo > 0

    def tracked(x: float) -> float:
        fx = f(x)
        if best[0] < x < best[1]:
            if (fx > 0) == lo_positive:
                best[0] = x
            else:
                best[1] = x
        return fx

    root, result = optimize.brentq(
        tracked,
        bracket.lo,
        bracket.hi,
        xtol=cfg.abs_tol,
        rtol=max(cfg.rel_tol, _MIN_RTOL),
        maxiter=cfg.max_iter,
        full_output=True,
        disp=False,
    )
    if not result.converged:
        raise ConvergenceError(
            f"求根在 {cfg.max_iter} 次迭代后未收敛 ({result.flag})", Bracket(best[0], best[1])
        )
    return float(root)


def find_min_scalar(
    f: Callable[[float], float], bracket: Bracket, cfg: SolverConfig = DEFAULT_SOLVER
) -> tuple[float, float]:
    """有界 Brent 极小化；对单峰函数返回真实极小点，其余情况为尽力而为"""
    result = optimize.minimize_scalar(
        f,
        bounds=(bracket.lo, bracket.hi),
        method="bounded",
        options={"xatol": cfg.abs_tol, "maxiter": cfg.max_iter},
    )
    if not result.success:
        raise ConvergenceError(f"极小化未收敛: {result.message}", bracket)
    return float(result.x), float(result.fun)


def find_threshold(
    predicate: Callable[[float], bool], bracket: Bracket, cfg: SolverConfig = DEFAULT_SOLVER
) -> float:
    """二分查找谓词由假变真的位置。

    要求 predicate(lo) 为假、predicate(hi) 为真；返回真侧端点，
    区间宽度收缩到 abs_tol + rel_tol·|x| 以下。
    """
    lo, hi = bracket.lo, bracket.hi
    if predicate(lo) or not predicate(hi):
        raise NoRootInBracket("阈值搜索要求左端为假、右端为真", bracket)

    for _ in range(cfg.max_iter):
        if hi - lo <= cfg.abs_tol + cfg.rel_tol * abs(hi):
            return hi
        mid = 0.5 * (lo + hi)
        if predicate(mid):
            hi = mid
        else:
            lo = mid
    raise ConvergenceError(f"阈值二分在 {cfg.max_iter} 次迭代后未收敛", Bracket(lo, hi))
