import math

import pytest

import numpy as np

from ReplicaBF.core.bayes_factors import bf_mixture_vs_advocate, bf_skeptical_vs_advocate, bf_zero_vs_skeptical
from ReplicaBF.core.conflict import pdc_pvalue, pdc_pvalue_array
from ReplicaBF.core.kernel import DomainError
from ReplicaBF.core.solver import (
    GammaNotAttainable,
    MixtureStatus,
    OffCurveError,
    SkepticalStatus,
    alpha_supremum,
    attainable_minimum,
    mixture_along_conflict,
    psi_on_u_gamma,
    solve_mixture_hyperparams,
    solve_relative_variance,
    solve_skeptical_bf,
    solve_skeptical_mixture_bf,
    u_gamma_trace,
)
from ReplicaBF.models.study import StudyPair


class TestRelativeVariance:
    def test_attainable_minimum(self):
        g_star, gamma_min = attainable_minimum(3.0)
        assert g_star == pytest.approx(8.0, rel=1e-4)
        assert gamma_min == pytest.approx(3 * math.exp(-4), rel=1e-8)

    def test_two_roots(self):
        sol = solve_relative_variance(3.0, 0.16)
        assert sol.status is SkepticalStatus.EXISTS
        assert sol.g_small < 8.0 < sol.g_jl
        assert sol.g_jl == pytest.approx(198, rel=0.02)
        for g in (sol.g_small, sol.g_jl):
            assert bf_zero_vs_skeptical(3.0, g) == pytest.approx(0.16, rel=1e-8)

    def test_worked_gamma(self):
        sol = solve_relative_variance(3.0, 0.1923)
        assert sol.g_small == pytest.approx(0.75, abs=0.01)

    def test_not_attainable(self):
        sol = solve_relative_variance(3.0, 0.05)
        assert sol.status is SkepticalStatus.NOT_ATTAINABLE
        assert sol.g_small is None
        assert sol.g_jl is None
        assert not sol.exists

    def test_small_z_never_attainable(self):
        assert solve_relative_variance(0.9, 0.5).status is SkepticalStatus.NOT_ATTAINABLE

    def test_double_root(self):
        _, gamma_min = attainable_minimum(3.0)
        sol = solve_relative_variance(3.0, gamma_min)
        assert sol.exists
        assert sol.g_small == pytest.approx(8.0, rel=1e-3)
        assert sol.g_jl == pytest.approx(8.0, rel=1e-3)

    @pytest.mark.parametrize("gamma", [0.0, 1.0, 1.5])
    def test_gamma_domain(self, gamma):
        with pytest.raises(DomainError):
            solve_relative_variance(3.0, gamma)


class TestUGamma:
    def test_psi_on_curve(self):
        assert psi_on_u_gamma(3.0, 0.16, 8.16) == pytest.approx(0.6948, abs=1e-3)
        assert psi_on_u_gamma(4.04, 0.042, 100.0) == pytest.approx(0.9287, abs=1e-3)

    def test_off_curve(self):
        with pytest.raises(OffCurveError) as info:
            psi_on_u_gamma(3.0, 0.16, 0.01)
        assert info.value.raw_psi < 0

    def test_trace(self):
        points = u_gamma_trace(3.0, 0.16, 50)
        assert len(points) == 50
        assert all(0 <= p.psi <= 1 for p in points)
        assert all(0 <= p.p_conflict <= 1 for p in points)
        assert points[0].psi < 1e-6
        assert points[-1].psi < 1e-6
        hs = [p.h for p in points]
        assert hs == sorted(hs)

    def test_trace_endpoints(self):
        points = u_gamma_trace(3.0, 0.16, 50)
        sk = solve_relative_variance(3.0, 0.16)
        assert points[0].h == pytest.approx(sk.g_small)
        assert points[-1].h == pytest.approx(sk.g_jl)
        assert points[-1].p_conflict > points[0].p_conflict

    def test_trace_not_attainable(self):
        with pytest.raises(GammaNotAttainable) as info:
            u_gamma_trace(1.0, 0.1, 10)
        assert info.value.gamma_min > 0.1

    def test_alpha_supremum(self):
        assert alpha_supremum(3.0, 0.16) >= 0.1


class TestMixtureAlongConflict:
    def test_hits_target(self):
        h = np.geomspace(0.01, 100.0, 40)
        psi = mixture_along_conflict(3.0, 0.1, h)
        assert psi is not None
        assert psi[0] == 0.0
        inner = (psi > 0) & (psi < 1)
        assert inner.any()
        np.testing.assert_allclose(pdc_pvalue_array(3.0, psi[inner], h[inner]), 0.1, atol=1e-12)

    def test_below_point_mass(self):
        assert mixture_along_conflict(3.0, 0.001, np.array([1.0, 2.0])) is None


class TestMixtureHyperparams:
    def test_worked_example(self):
        sol = solve_mixture_hyperparams(3.0, 0.16, 0.1)
        assert sol.status is MixtureStatus.ACHIEVED
        assert sol.hyperparams.h == pytest.approx(8.16, abs=0.1)
        assert sol.hyperparams.psi == pytest.approx(0.69, abs=0.01)
        assert sol.p_realized == pytest.approx(0.1, abs=1e-6)

    def test_no_conflict(self):
        # P_S(g_γ) 已超过 α
        sol = solve_mixture_hyperparams(3.0, 0.16, 0.01)
        assert sol.status is MixtureStatus.FALLBACK_NO_CONFLICT
        assert sol.hyperparams.psi == 0.0

    def test_not_attainable(self):
        with pytest.raises(GammaNotAttainable):
            solve_mixture_hyperparams(3.0, 0.01, 0.1)

    def test_alpha_domain(self):
        with pytest.raises(DomainError):
            solve_mixture_hyperparams(3.0, 0.16, 1.0)


class TestSkepticalBF:
    def test_worked_example(self, worked_study):
        sol = solve_skeptical_bf(worked_study)
        assert sol is not None
        assert sol.bf_value == pytest.approx(0.19, abs=0.005)
        assert sol.g_small == pytest.approx(0.75, abs=0.01)
        assert sol.binding
        assert abs(bf_skeptical_vs_advocate(worked_study, sol.g_small) - sol.gamma) <= 1e-6
        assert sol.dual_root_residual is not None

    def test_boundary_solution(self, ssrp_studies):
        kovacs = ssrp_studies["Kovacs"]
        sol = solve_skeptical_bf(kovacs)
        _, gamma_min = attainable_minimum(kovacs.z_o)
        assert sol is not None
        assert not sol.binding
        assert sol.gamma == pytest.approx(gamma_min, rel=1e-9)
        assert sol.g_small == pytest.approx(2.22**2 - 1, rel=0.01)
        assert sol.bf_value <= sol.gamma

    def test_nonexistent(self, ssrp_studies):
        assert solve_skeptical_bf(ssrp_studies["Rand"]) is None
        assert solve_skeptical_bf(StudyPair.from_zstat(0.8, 1.0, 1.0)) is None

    def test_random_fixed_points(self, rng):
        checked = 0
        for _ in range(100):
            study = StudyPair.from_zstat(rng.uniform(1.5, 5.0), rng.uniform(-1.0, 5.0), rng.uniform(0.5, 5.0))
            sol = solve_skeptical_bf(study)
            if sol is None or not sol.binding:
                continue
            checked += 1
            assert abs(bf_skeptical_vs_advocate(study, sol.g_small) - sol.gamma) <= 1e-6
            assert bf_zero_vs_skeptical(study.z_o, sol.g_small) == pytest.approx(sol.gamma, rel=1e-8)
        assert checked > 0


class TestSkepticalMixtureBF:
    def test_worked_example(self, worked_study):
        sol = solve_skeptical_mixture_bf(worked_study, 0.1)
        assert sol is not None
        assert sol.status is MixtureStatus.ACHIEVED
        assert sol.bf_value == pytest.approx(0.16, abs=0.005)
        assert sol.hyperparams.psi == pytest.approx(0.69, abs=0.01)
        assert sol.hyperparams.h == pytest.approx(8.16, abs=0.1)
        assert sol.p_realized == pytest.approx(0.1, abs=0.005)
        assert sol.binding
        assert abs(bf_mixture_vs_advocate(worked_study, sol.hyperparams) - sol.gamma) <= 1e-6

    def test_fallback_equals_skeptical(self, ssrp_studies):
        aviezer = ssrp_studies["Aviezer"]
        skeptical = solve_skeptical_bf(aviezer)
        sol = solve_skeptical_mixture_bf(aviezer, 0.05)
        assert sol.status is MixtureStatus.FALLBACK_IRREDUCIBLE
        assert sol.is_fallback
        assert sol.bf_value == skeptical.bf_value
        assert sol.hyperparams.psi == 0.0
        assert sol.hyperparams.h == skeptical.g_small

    def test_fallback_no_conflict(self, ssrp_studies):
        sol = solve_skeptical_mixture_bf(ssrp_studies["Balafoutas"], 0.01)
        assert sol.status is MixtureStatus.FALLBACK_NO_CONFLICT
        assert sol.p_realized >= 0.01

    def test_nonexistent(self, ssrp_studies):
        for alpha in (0.01, 0.05, 0.1):
            assert solve_skeptical_mixture_bf(ssrp_studies["Rand"], alpha) is None

    def test_alpha_domain(self, worked_study):
        with pytest.raises(DomainError):
            solve_skeptical_mixture_bf(worked_study, 0.0)

    def test_boundary_alpha(self, worked_study):
        sol = solve_skeptical_mixture_bf(worked_study, 0.99)
        assert sol is not None
        assert sol.status in set(MixtureStatus)
        assert 0 <= sol.p_realized <= 1

    def test_repeatable(self, worked_study):
        first = solve_skeptical_mixture_bf(worked_study, 0.1)
        second = solve_skeptical_mixture_bf(worked_study, 0.1)
        assert first == second
        runs = [solve_skeptical_bf(worked_study) for _ in range(2)]
        assert len({(sol.gamma, sol.g_small, sol.g_jl, sol.bf_value) for sol in runs}) == 1

    def test_random_fixed_points(self, rng):
        for _ in range(20):
            study = StudyPair.from_zstat(rng.uniform(2.0, 4.5), rng.uniform(0.0, 4.0), rng.uniform(0.5, 4.0))
            sol = solve_skeptical_mixture_bf(study, 0.1)
            if sol is None or sol.status is not MixtureStatus.ACHIEVED:
                continue
            assert pdc_pvalue(study.z_o, sol.hyperparams) == pytest.approx(0.1, abs=1e-6)
            if sol.binding:
                assert abs(bf_mixture_vs_advocate(study, sol.hyperparams) - sol.gamma) <= 1e-6


class TestLargeAlphaLimit:
    """α 增大时 BF_SM(α) 向 BF_S 收敛，但只能逼近到 α*_γ 为止"""

    def test_approaches_skeptical(self, worked_study):
        bf_s = solve_skeptical_bf(worked_study).gamma
        near = solve_skeptical_mixture_bf(worked_study, 0.85, h_max=1e7)
        far = solve_skeptical_mixture_bf(worked_study, 0.2, h_max=1e7)
        assert near.status is MixtureStatus.ACHIEVED
        assert far.status is MixtureStatus.ACHIEVED
        assert abs(bf_s - near.gamma) <= 0.02
        assert abs(bf_s - near.gamma) < abs(bf_s - far.gamma)

    def test_limited_by_alpha_supremum(self, worked_study):
        near = solve_skeptical_mixture_bf(worked_study, 0.85, h_max=1e7)
        supremum = alpha_supremum(worked_study.z_o, near.gamma)
        assert 0.85 - 5e-3 <= supremum < 1
