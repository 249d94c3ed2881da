"""数值积分与蒙特卡洛参照实现，用于核对闭式结果"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from ReplicaBF.core.kernel import normal_pdf
from ReplicaBF.models.study import MixtureHyperparams, StudyPair

_HALF_WIDTH = 12.0


def marginal_likelihood_quadrature(x: float, se: float, prior_mean: float, prior_var: float) -> float:
    """∫ N(x; θ, se²)·N(θ; μ, τ²) dθ 的数值积分

    积分区间取被积函数（正比于 θ 的后验）中心两侧各 12 个后验标准差。
    """
    precision = 1 / se**2 + 1 / prior_var
    center = (x / se**2 + prior_mean / prior_var) / precision
    half_width = _HALF_WIDTH / math.sqrt(precision)

    def integrand(theta: float) -> float:
        return float(normal_pdf(x, theta, se**2) * normal_pdf(theta, prior_mean, prior_var))

    value, _ = integrate.quad(
        integrand,
        center - half_width,
        center + half_width,
        points=[center],
        epsabs=0.0,
        epsrel=1e-11,
        limit=200,
    )
    return value


def bf_replication_quadrature(study: StudyPair) -> float:
    """H_0: θ=0 对 H_A: θ ~ N(θ̂_o, σ_o²)，基于 θ̂_r"""
    null = float(normal_pdf(study.theta_r, 0.0, study.sigma_r**2))
    return null / marginal_likelihood_quadrature(study.theta_r, study.sigma_r, study.theta_o, study.sigma_o**2)


def bf_zero_vs_skeptical_quadrature(study: StudyPair, g: float) -> float:
    """H_0 对 H_S: θ ~ N(0, gσ_o²)，基于 θ̂_o"""
    null = float(normal_pdf(study.theta_o, 0.0, study.sigma_o**2))
    return null / marginal_likelihood_quadrature(study.theta_o, study.sigma_o, 0.0, g * study.sigma_o**2)


def bf_skeptical_vs_advocate_quadrature(study: StudyPair, g: float) -> float:
    """H_S 对 H_A，基于 θ̂_r"""
    skeptic = marginal_likelihood_quadrature(study.theta_r, study.sigma_r, 0.0, g * study.sigma_o**2)
    advocate = marginal_likelihood_quadrature(study.theta_r, study.sigma_r, study.theta_o, study.sigma_o**2)
    return skeptic / advocate


def bf_zero_vs_mixture_quadrature(study: StudyPair, hp: MixtureHyperparams) -> float:
    """H_0 对 H_SM: θ ~ ψδ₀ + (1−ψ)N(0, hσ_o²)，基于 θ̂_o

    点质量分量的边际似然就是零假设下的密度，只有连续分量需要积分。
    """
    null = float(normal_pdf(study.theta_o, 0.0, study.sigma_o**2))
    slab = marginal_likelihood_quadrature(study.theta_o, study.sigma_o, 0.0, hp.h * study.sigma_o**2)
    return null / (hp.psi * null + (1 - hp.psi) * slab)


def bf_mixture_vs_advocate_quadrature(study: StudyPair, hp: MixtureHyperparams) -> float:
    """H_SM 对 H_A，基于 θ̂_r"""
    point = float(normal_pdf(study.theta_r, 0.0, study.sigma_r**2))
    slab = marginal_likelihood_quadrature(study.theta_r, study.sigma_r, 0.0, hp.h * study.sigma_o**2)
    advocate = marginal_likelihood_quadrature(study.theta_r, study.sigma_r, study.theta_o, study.sigma_o**2)
    return (hp.psi * point + (1 - hp.psi) * slab) / advocate


def conflict_pvalue_monte_carlo(
    z_o: float, hp: MixtureHyperparams, draws: int, rng: np.random.Generator
) -> tuple[float, float]:
    """分量条件下 Pr{m(T) ≤ m(t_obs)} 的蒙特卡洛估计，返回 (估计值, 标准误)

    以 σ_o = 1 标准化：点质量分量 T ~ N(0, 1)，连续分量 T ~ N(0, 1+h)。
    """
    tails = []
    for var in (1.0, 1.0 + hp.h):
        t = rng.normal(0.0, math.sqrt(var), size=draws)
        tails.append(float(np.mean(normal_pdf(t, 0.0, var) <= normal_pdf(z_o, 0.0, var))))

    p_point, p_slab = tails
    estimate = hp.psi * p_point + (1 - hp.psi) * p_slab
    variance = (hp.psi**2 * p_point * (1 - p_point) + (1 - hp.psi) ** 2 * p_slab * (1 - p_slab)) / draws
    return estimate, math.sqrt(variance)
