"""反向贝叶斯求解器

- BF_{0:S}(z_o; g) = γ 的两个根：怀疑方差 g_γ 与 Jeffreys–Lindley 根 g_γ^{JL}
- 怀疑贝叶斯因子 BF_S = inf{γ: BF_{S:A}(g_γ) ≤ γ}
- U_γ 曲线与受冲突约束的混合先验超参数 (ψ_{γ,α}, h_{γ,α})
- 怀疑混合贝叶斯因子 BF_SM(α)

所有根都在 t = log g（或 log γ）尺度上求解。
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Any

from loguru import logger

import numpy as np

from ReplicaBF.core.bayes_factors import (
    bf_mixture_vs_advocate,
    bf_skeptical_vs_advocate,
    bf_zero_vs_skeptical,
    log_bf_zero_vs_skeptical,
)
from ReplicaBF.core.conflict import conditional_pvalues, pdc_pvalue, pdc_pvalue_array, pdc_pvalue_skeptical
from ReplicaBF.core.kernel import (
    DEFAULT_SOLVER,
    Bracket,
    DomainError,
    NoRootInBracket,
    find_min_scalar,
    find_root,
    find_threshold,
)
from ReplicaBF.models.config import InformativeEnum, SearchConfig, SolverConfig
from ReplicaBF.models.study import MixtureHyperparams, StudyPair

DEFAULT_SEARCH = SearchConfig()

# g 的可表示范围（对数尺度）
_T_FLOOR = math.log(1e-300)
_T_CEIL = math.log(1e300)
_PSI_SLACK = 1e-9
_FIXED_POINT_TOL = 1e-8


class SkepticalStatus(InformativeEnum):
    EXISTS = ("exists", "存在")
    NOT_ATTAINABLE = ("not-attainable", "γ 不可达", "BF_{0:S} 的最小值大于 γ")


class MixtureStatus(InformativeEnum):
    ACHIEVED = ("achieved", "已达到", "U_γ 上存在冲突 p 值等于 α 的点")
    FALLBACK_NO_CONFLICT = ("fallback-no-conflict", "回退：无冲突", "怀疑先验本身的 P_S ≥ α")
    FALLBACK_IRREDUCIBLE = ("fallback-irreducible", "回退：冲突不可控", "P_S < α 且搜索范围内无法达到 α")
    NOT_ATTAINABLE = ("not-attainable", "γ 不可达")


class GammaNotAttainable(DomainError):
    def __init__(self, z_o: float, gamma: float, gamma_min: float):
        super().__init__(f"γ={gamma:.6g} 不可达：z_o={z_o:.6g} 时 BF_{{0:S}} 的最小值为 {gamma_min:.6g}")
        self.z_o = z_o
        self.gamma = gamma
        self.gamma_min = gamma_min


class OffCurveError(DomainError):
    def __init__(self, message: str, raw_psi: float):
        super().__init__(message)
        self.raw_psi = raw_psi


@dataclass(frozen=True)
class SkepticalSolution:
    gamma: float
    g_small: float | None
    g_jl: float | None
    bf_value: float | None
    p_conflict: float | None
    status: SkepticalStatus
    gamma_min: float = math.nan
    binding: bool = True
    dual_root_residual: float | None = None

    @property
    def exists(self) -> bool:
        return self.status is SkepticalStatus.EXISTS


@dataclass(frozen=True)
class MixtureSolution:
    gamma: float
    alpha_target: float
    hyperparams: MixtureHyperparams | None
    p_realized: float | None
    status: MixtureStatus
    bf_value: float | None = None
    binding: bool = True

    @property
    def is_fallback(self) -> bool:
        return self.status in (MixtureStatus.FALLBACK_NO_CONFLICT, MixtureStatus.FALLBACK_IRREDUCIBLE)


@dataclass(frozen=True)
class UGammaPoint:
    h: float
    psi: float
    p_conflict: float


# ── BF_{0:S} = γ 的根 ────────────────────────────────────────────────


@lru_cache(maxsize=1024)
def attainable_minimum(
    z_o: float, cfg: SolverConfig = DEFAULT_SOLVER, search: SearchConfig = DEFAULT_SEARCH
) -> tuple[float, float]:
    """BF_{0:S} 在 g ∈ [g_lower, g_upper] 上的极小点与极小值 γ_min"""
    t_min, log_min = find_min_scalar(
        lambda t: float(log_bf_zero_vs_skeptical(z_o, math.exp(t))),
        Bracket(math.log(search.g_lower), math.log(search.g_upper)),
        cfg,
    )
    return math.exp(t_min), math.exp(log_min)


def solve_relative_variance(
    z_o: float, gamma: float, cfg: SolverConfig = DEFAULT_SOLVER, search: SearchConfig = DEFAULT_SEARCH
) -> SkepticalSolution:
    """求 BF_{0:S}(z_o; g) = γ 的两个根，较小者为怀疑相对方差"""
    if not 0 < gamma < 1:
        raise DomainError(f"γ 必须在 (0, 1) 内，收到 {gamma}")

    g_star, gamma_min = attainable_minimum(z_o, cfg, search)
    if gamma_min > gamma:
        return SkepticalSolution(
            gamma=gamma,
            g_small=None,
            g_jl=None,
            bf_value=None,
            p_conflict=None,
            status=SkepticalStatus.NOT_ATTAINABLE,
            gamma_min=gamma_min,
        )

    log_gamma = math.log(gamma)

    def excess(t: float) -> float:
        return float(log_bf_zero_vs_skeptical(z_o, math.exp(t))) - log_gamma

    t_star = math.log(g_star)
    if excess(t_star) >= 0:
        # γ 恰为极小值：二重根
        g_small = g_jl = g_star
    else:
        g_small = math.exp(find_root(excess, Bracket(_T_FLOOR, t_star), cfg))
        g_jl = _jeffreys_lindley_root(excess, t_star, cfg)

    return SkepticalSolution(
        gamma=gamma,
        g_small=g_small,
        g_jl=g_jl,
        bf_value=None,
        p_conflict=pdc_pvalue_skeptical(z_o, g_small),
        status=SkepticalStatus.EXISTS,
        gamma_min=gamma_min,
    )


def _jeffreys_lindley_root(excess: Callable[[float], float], t_star: float, cfg: SolverConfig) -> float:
    t_lo, step = t_star, 1.0
    t_hi = t_lo + step
    while excess(t_hi) <= 0:
        if t_hi >= _T_CEIL:
            logger.warning("Jeffreys–Lindley 根超出浮点范围，记为 +inf")
            return math.inf
        t_lo, step = t_hi, step * 2
        t_hi = min(t_hi + step, _T_CEIL)
    return math.exp(find_root(excess, Bracket(t_lo, t_hi), cfg))


# ── U_γ 曲线 ─────────────────────────────────────────────────────────


def _psi_on_curve(z_o: float, gamma: float, h):
    b = np.exp(log_bf_zero_vs_skeptical(z_o, h))
    return np.clip((1 - b / gamma) / (1 - b), 0.0, 1.0)


def psi_on_u_gamma(z_o: float, gamma: float, h: float) -> float:
    """使 (ψ, h) ∈ U_γ 的唯一 ψ；h 须位于 [g_γ, g_γ^{JL}]"""
    b = bf_zero_vs_skeptical(z_o, h)
    raw = math.inf if b == 1 else (1 - b / gamma) / (1 - b)
    if not -_PSI_SLACK <= raw <= 1:
        raise OffCurveError(f"h={h:.6g} 不在 U_γ 上 (γ={gamma:.6g})，ψ 原始值为 {raw:.6g}", raw)
    return min(max(raw, 0.0), 1.0)


def u_gamma_trace(
    z_o: float,
    gamma: float,
    n_points: int,
    cfg: SolverConfig = DEFAULT_SOLVER,
    search: SearchConfig = DEFAULT_SEARCH,
) -> list[UGammaPoint]:
    """按 h 从 g_γ 到 g_γ^{JL} 对数均匀采样 U_γ，附带各点的冲突 p 值"""
    if n_points < 2:
        raise DomainError(f"采样点数至少为 2，收到 {n_points}")
    sk = solve_relative_variance(z_o, gamma, cfg, search)
    if not sk.exists:
        raise GammaNotAttainable(z_o, gamma, sk.gamma_min)
    assert sk.g_small is not None and sk.g_jl is not None

    h_end = sk.g_jl if math.isfinite(sk.g_jl) else search.g_upper
    h = np.geomspace(sk.g_small, max(h_end, sk.g_small), n_points)
    psi = _psi_on_curve(z_o, gamma, h)
    p = pdc_pvalue_array(z_o, psi, h)
    return [UGammaPoint(h=float(hi), psi=float(si), p_conflict=float(pi)) for hi, si, pi in zip(h, psi, p, strict=True)]


def alpha_supremum(
    z_o: float, gamma: float, n_points: int = 400, cfg: SolverConfig = DEFAULT_SOLVER, search: SearchConfig = DEFAULT_SEARCH
) -> float:
    """U_γ 上可达到的最大冲突水平 α*_γ（经验值）"""
    return max(point.p_conflict for point in u_gamma_trace(z_o, gamma, n_points, cfg, search))


def mixture_along_conflict(z_o: float, alpha: float, h) -> np.ndarray | None:
    """固定 h 时使 P(z_o; ψ, h) = α 的 ψ；α 低于点质量分量的 p 值时返回 None。

    连续分量本身的 p 值已不超过 α 时取 ψ = 0，即退化为纯怀疑先验。
    """
    p_point, p_slab = conditional_pvalues(z_o, h)
    if p_point > alpha:
        return None
    p_slab = np.asarray(p_slab, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        psi = (p_slab - alpha) / (p_slab - p_point)
    return np.clip(np.nan_to_num(psi, nan=0.0), 0.0, 1.0)


# ── 受冲突约束的混合先验 ─────────────────────────────────────────────


def solve_mixture_hyperparams(
    z_o: float,
    gamma: float,
    alpha: float,
    h_max: float | None = None,
    cfg: SolverConfig = DEFAULT_SOLVER,
    search: SearchConfig = DEFAULT_SEARCH,
) -> MixtureSolution:
    """在 U_γ 上寻找冲突 p 值等于 α 的最小 h。

    Raises
    ------
    GammaNotAttainable
        γ 小于 BF_{0:S} 的最小值。
    """
    if not 0 < alpha < 1:
        raise DomainError(f"α 必须在 (0, 1) 内，收到 {alpha}")
    sk = solve_relative_variance(z_o, gamma, cfg, search)
    if not sk.exists:
        raise GammaNotAttainable(z_o, gamma, sk.gamma_min)
    return _mixture_from_skeptical(z_o, sk, alpha, search.h_max if h_max is None else h_max, cfg, search)


def _mixture_from_skeptical(
    z_o: float, sk: SkepticalSolution, alpha: float, h_max: float, cfg: SolverConfig, search: SearchConfig
) -> MixtureSolution:
    assert sk.g_small is not None and sk.g_jl is not None and sk.p_conflict is not None
    gamma, g_small, p_s = sk.gamma, sk.g_small, sk.p_conflict
    fallback_hp = MixtureHyperparams(psi=0.0, h=g_small)

    if p_s >= alpha:
        return MixtureSolution(gamma, alpha, fallback_hp, p_s, MixtureStatus.FALLBACK_NO_CONFLICT)

    irreducible = MixtureSolution(gamma, alpha, fallback_hp, p_s, MixtureStatus.FALLBACK_IRREDUCIBLE)
    h_end = min(sk.g_jl, h_max)
    if h_end <= g_small:
        return irreducible

    h = np.geomspace(g_small, h_end, search.h_grid)
    p = pdc_pvalue_array(z_o, _psi_on_curve(z_o, gamma, h), h)
    hits = np.flatnonzero(p >= alpha)
    if hits.size == 0:
        return irreducible

    i = max(int(hits[0]), 1)

    def excess(t: float) -> float:
        h_t = math.exp(t)
        return float(pdc_pvalue_array(z_o, _psi_on_curve(z_o, gamma, h_t), h_t)) - alpha

    h_star = math.exp(find_root(excess, Bracket(math.log(h[i - 1]), math.log(h[i])), cfg))
    hp = MixtureHyperparams(psi=float(_psi_on_curve(z_o, gamma, h_star)), h=h_star)
    return MixtureSolution(gamma, alpha, hp, pdc_pvalue(z_o, hp), MixtureStatus.ACHIEVED)


# ── 下确界搜索 ───────────────────────────────────────────────────────


def _scan_infimum(
    gamma_min: float,
    evaluate: Callable[[float], Any],
    cfg: SolverConfig,
    search: SearchConfig,
) -> tuple[float, Any, bool] | None:
    """在 (γ_min, 1) 上寻找使条件 BF ≤ γ 成立的最小 γ。

    evaluate(γ) 返回带 bf_value 的解，不可行时返回 None。
    返回 (γ, 解, 是否为条件函数的变号点)；条件处处不成立时返回 None。
    """

    def holds(sol: Any, gamma: float) -> bool:
        return sol is not None and sol.bf_value <= gamma

    def residual(t: float) -> float:
        gamma = math.exp(t)
        sol = evaluate(gamma)
        # 不可行点视为条件不成立
        return 1.0 if sol is None else sol.bf_value - gamma

    t_prev = math.log(gamma_min)
    sol_prev = evaluate(gamma_min)
    if holds(sol_prev, gamma_min):
        logger.debug(f"条件在 γ_min={gamma_min:.6g} 处已成立")
        return gamma_min, sol_prev, False

    for t in np.linspace(t_prev, 0.0, search.gamma_grid + 2)[1:-1]:
        gamma = math.exp(t)
        sol = evaluate(gamma)
        if holds(sol, gamma):
            break
        t_prev, sol_prev = float(t), sol
    else:
        return None

    logger.debug(f"γ 扫描命中区间 [{math.exp(t_prev):.6g}, {gamma:.6g}]")
    if sol_prev is not None:
        try:
            t_root = find_root(residual, Bracket(t_prev, float(t)), cfg)
            gamma_root = math.exp(t_root)
            sol_root = evaluate(gamma_root)
            if sol_root is not None and abs(sol_root.bf_value - gamma_root) <= _FIXED_POINT_TOL:
                return gamma_root, sol_root, True
            logger.debug("条件函数在变号处不连续，改用二分")
        except NoRootInBracket:
            pass

    t_edge = find_threshold(lambda s: holds(evaluate(math.exp(s)), math.exp(s)), Bracket(t_prev, float(t)), cfg)
    gamma_edge = math.exp(t_edge)
    return gamma_edge, evaluate(gamma_edge), False


def solve_skeptical_bf(
    study: StudyPair, cfg: SolverConfig = DEFAULT_SOLVER, search: SearchConfig = DEFAULT_SEARCH
) -> SkepticalSolution | None:
    """怀疑贝叶斯因子 BF_S；不存在时返回 None"""
    _, gamma_min = attainable_minimum(study.z_o, cfg, search)
    if gamma_min >= 1:
        logger.info(f"{study.label or '研究'}: |z_o| ≤ 1，任何 γ < 1 均不可达，BF_S 不存在")
        return None

    def evaluate(gamma: float) -> SkepticalSolution | None:
        sk = solve_relative_variance(study.z_o, gamma, cfg, search)
        if not sk.exists:
            return None
        assert sk.g_small is not None
        return replace(sk, bf_value=bf_skeptical_vs_advocate(study, sk.g_small))

    found = _scan_infimum(gamma_min, evaluate, cfg, search)
    if found is None:
        logger.info(f"{study.label or '研究'}: 条件 BF_{{S:A}} ≤ γ 在 (γ_min, 1) 上从不成立，BF_S 不存在")
        return None

    _, sol, binding = found
    dual = None
    if math.isfinite(sol.g_jl):
        dual = abs(sol.bf_value - bf_skeptical_vs_advocate(study, sol.g_jl))
        logger.debug(f"{study.label or '研究'}: 双根残差 |BF_S:A(g_γ) − BF_S:A(g_γ^JL)| = {dual:.3g}")
    return replace(sol, binding=binding, dual_root_residual=dual)


def solve_skeptical_mixture_bf(
    study: StudyPair,
    alpha: float,
    h_max: float | None = None,
    cfg: SolverConfig = DEFAULT_SOLVER,
    search: SearchConfig = DEFAULT_SEARCH,
) -> MixtureSolution | None:
    """怀疑混合贝叶斯因子 BF_SM(α)；不存在时返回 None。

    下确界只在混合解为 achieved 的 γ 上搜索；若没有这样的 γ 满足 BF_{SM:A} ≤ γ，
    则回退到 BF_S，此时超参数为 (0, g_S)，状态按 P_S 与 α 的大小区分。
    """
    if not 0 < alpha < 1:
        raise DomainError(f"α 必须在 (0, 1) 内，收到 {alpha}")
    h_max = search.h_max if h_max is None else h_max
    label = study.label or "研究"

    _, gamma_min = attainable_minimum(study.z_o, cfg, search)
    if gamma_min < 1:

        def evaluate(gamma: float) -> MixtureSolution | None:
            sk = solve_relative_variance(study.z_o, gamma, cfg, search)
            if not sk.exists:
                return None
            mix = _mixture_from_skeptical(study.z_o, sk, alpha, h_max, cfg, search)
            if mix.status is not MixtureStatus.ACHIEVED:
                return None
            assert mix.hyperparams is not None
            return replace(mix, bf_value=bf_mixture_vs_advocate(study, mix.hyperparams))

        found = _scan_infimum(gamma_min, evaluate, cfg, search)
        if found is not None:
            _, sol, binding = found
            return replace(sol, binding=binding)

    skeptical = solve_skeptical_bf(study, cfg, search)
    if skeptical is None:
        logger.info(f"{label}: α={alpha:g} 时 BF_SM 不存在")
        return None

    assert skeptical.g_small is not None and skeptical.p_conflict is not None
    status = (
        MixtureStatus.FALLBACK_NO_CONFLICT if skeptical.p_conflict >= alpha else MixtureStatus.FALLBACK_IRREDUCIBLE
    )
    logger.info(f"{label}: α={alpha:g} 时回退到 BF_S ({status.display_name})")
    return MixtureSolution(
        gamma=skeptical.gamma,
        alpha_target=alpha,
        hyperparams=MixtureHyperparams(psi=0.0, h=skeptical.g_small),
        p_realized=skeptical.p_conflict,
        status=status,
        bf_value=skeptical.bf_value,
        binding=skeptical.binding,
    )
