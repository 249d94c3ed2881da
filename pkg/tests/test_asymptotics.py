import math

import pytest
from pydantic import ValidationError

import numpy as np
import pandas as pd

from ReplicaBF.consts import SCENARIO_DIR
from ReplicaBF.core.asymptotics import (
    ScenarioKind,
    SimulationScenario,
    check_information_consistency,
    load_scenario,
    run_scenario,
    simulate_bfr_consistency,
    simulate_bfsa_limit,
    simulate_mixture_consistency,
)
from ReplicaBF.core.kernel import DomainError
from ReplicaBF.models.study import ConsistencyScenario, MixtureHyperparams, StudyPair


def _scenario(name: str) -> SimulationScenario:
    return load_scenario(SCENARIO_DIR / f"{name}.json")


class TestReplicationConsistency:
    def test_null_slope(self):
        spec = _scenario("prop1-null")
        report = simulate_bfr_consistency(spec.scenario)
        assert 0.8 <= report.fitted_slope <= 1.2
        assert report.n_values == [100, 1_000, 10_000, 100_000, 1_000_000]

    def test_alternative_rate(self):
        spec = _scenario("prop1-alt")
        report = simulate_bfr_consistency(spec.scenario)
        assert all(rate < 0 for rate in report.rates)
        assert report.rates[-1] == pytest.approx(-(0.3**2) / 2, abs=1e-3)
        assert abs(report.rates[-1] - report.rates[-2]) < abs(report.rates[1] - report.rates[0])

    def test_schedule_prefix_is_stable(self):
        scn = _scenario("prop1-null").scenario
        full = simulate_bfr_consistency(scn)
        prefix = simulate_bfr_consistency(scn.model_copy(update={"n_schedule": [100, 1_000]}))
        assert prefix.mean_log_bf == full.mean_log_bf[:2]


class TestSkepticalLimit:
    @pytest.mark.parametrize("name", ["prop2-null", "prop2-advocate", "prop2-between"])
    def test_density_ratio(self, name):
        spec = _scenario(name)
        original = spec.scenario.original_study()
        report = simulate_bfsa_limit(spec.scenario, spec.g, original)
        assert report.limit is not None
        assert abs(report.mean_bf[-1] - report.limit) <= 3 * report.se_bf[-1]

    def test_invalid_g(self):
        scn = _scenario("prop2-null").scenario
        with pytest.raises(DomainError):
            simulate_bfsa_limit(scn, 0.0, scn.original_study())


class TestMixtureConsistency:
    def test_null_divergence(self):
        spec = _scenario("result1-null")
        report = simulate_mixture_consistency(
            spec.scenario, MixtureHyperparams(psi=spec.psi, h=spec.h), spec.scenario.original_study()
        )
        assert 0.8 <= report.fitted_slope <= 1.2
        assert report.limit is None

    def test_alternative_limit(self):
        spec = _scenario("result1-alt")
        report = simulate_mixture_consistency(
            spec.scenario, MixtureHyperparams(psi=spec.psi, h=spec.h), spec.scenario.original_study()
        )
        assert report.limit is not None
        assert abs(report.mean_bf[-1] - report.limit) <= 3 * report.se_bf[-1]

    def test_psi_zero(self):
        scn = _scenario("result1-null").scenario
        with pytest.raises(DomainError):
            simulate_mixture_consistency(scn, MixtureHyperparams(psi=0.0, h=1.0), scn.original_study())


class TestInformationConsistency:
    def test_decreasing(self):
        rows = check_information_consistency(StudyPair.from_zstat(3.0, 3.0, 1.0), [0.0, 2.0, 4.0, 8.0, 16.0])
        bfs = [bf for _, bf in rows]
        assert all(b < a for a, b in zip(bfs, bfs[1:], strict=False))
        assert bfs[-1] < 1e-10

    def test_schedule_must_increase(self):
        with pytest.raises(DomainError):
            check_information_consistency(StudyPair.from_zstat(3.0, 3.0, 1.0), [2.0, 1.0])


class TestScenarioFiles:
    def test_bundled_scenarios_parse(self):
        names = {path.stem for path in SCENARIO_DIR.glob("*.json")}
        assert names == {
            "prop1-null",
            "prop1-alt",
            "prop2-null",
            "prop2-advocate",
            "prop2-between",
            "result1-null",
            "result1-alt",
            "information",
        }
        for name in names:
            assert isinstance(_scenario(name).kind, ScenarioKind)

    def test_missing_kind_fields(self):
        with pytest.raises(ValidationError):
            SimulationScenario.model_validate(
                {"name": "bad", "kind": "mixture", "scenario": {"theta_star": 0.0, "n_schedule": [10, 100]}}
            )

    def test_schedule_must_increase(self):
        with pytest.raises(ValidationError):
            ConsistencyScenario(theta_star=0.0, n_schedule=[100, 10])

    def test_run_is_deterministic(self):
        spec = _scenario("prop1-null")
        first = run_scenario(spec, seed=7)
        second = run_scenario(spec, seed=7)
        pd.testing.assert_frame_equal(first, second)
        assert not np.allclose(first["mean_log_bf"], run_scenario(spec, seed=8)["mean_log_bf"], rtol=0, atol=0)

    def test_information_frame(self):
        frame = run_scenario(_scenario("information"))
        assert list(frame.columns) == ["z_r", "bf_r"]
        assert frame["bf_r"].is_monotonic_decreasing
        assert math.isfinite(frame["bf_r"].iloc[0])
