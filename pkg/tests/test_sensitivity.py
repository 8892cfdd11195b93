"""
Sensitivity analysis

One-at-a-time elasticities and seeded Monte-Carlo propagation.
"""

import math

import numpy as np
import pytest

from analysis import sensitivity
from analysis.sensitivity import (
    Distribution,
    SensitivityConfig,
    SensitivityReport,
    _inverse_cdf,
    _statistics,
    elasticities,
    monte_carlo,
    oat_elasticity,
    propagate,
    run_sensitivity,
)
from core.engine import evaluate_model
from core.report import canonical_json
from core.errors import (
    ConfigurationError,
    SamplingError,
    StructuralError,
    UndefinedElasticityError,
)
from tests.conftest import infra_bound, make_parameter


class TestElasticity:
    """Central-difference elasticities of ledger outputs."""

    def test_net_to_maintenance_costs(self, beijing_bound):
        """Net value is linear in M with slope -P_T."""
        ledger = evaluate_model(beijing_bound).ledger
        v_i = evaluate_model(beijing_bound).result("V_I_infra").value.magnitude
        elasticity = oat_elasticity(beijing_bound, "M", delta=1e-3, target="net")
        assert elasticity == pytest.approx(-v_i / ledger.net, rel=1e-6)

    def test_item_target(self, beijing_bound):
        elasticity = oat_elasticity(beijing_bound, "A_E", target="V_W")
        assert elasticity == pytest.approx(1.34e9 * 6 / 8.04504e9, rel=1e-6)

    def test_disservice_total_to_share(self, beijing_bound):
        evaluation = evaluate_model(beijing_bound)
        v_i = evaluation.result("V_I_infra").value.magnitude
        elasticity = oat_elasticity(beijing_bound, "P_T", target="eds_total")
        assert elasticity == pytest.approx(v_i / evaluation.ledger.eds_total, rel=1e-6)

    def test_zero_point_value(self, synthetic_bound):
        with pytest.raises(UndefinedElasticityError):
            oat_elasticity(synthetic_bound, "X")

    def test_zero_output(self):
        bound = infra_bound(p_t=0.0)
        with pytest.raises(UndefinedElasticityError):
            oat_elasticity(bound, "M", target="eds_total")

    def test_unknown_parameter(self, beijing_bound):
        with pytest.raises(StructuralError):
            oat_elasticity(beijing_bound, "Q")

    def test_unknown_target(self, beijing_bound):
        with pytest.raises(StructuralError):
            oat_elasticity(beijing_bound, "M", target="V_X")

    def test_elasticities_mark_undefined_as_none(self, synthetic_bound):
        result = elasticities(synthetic_bound, SensitivityConfig(samples=1))
        assert result["X"] is None
        assert result["M"] is not None
        assert sorted(result) == synthetic_bound.used_parameters()

    def test_perturbation_leaving_domain_is_none(self):
        """P_T = 1 cannot be perturbed upwards."""
        bound = infra_bound(p_t=1.0)
        result = elasticities(bound, SensitivityConfig(samples=1, target="eds_total"))
        assert result["P_T"] is None
        assert result["M"] == pytest.approx(1.0)


class TestSensitivityConfig:
    def test_defaults(self):
        config = SensitivityConfig()
        assert config.samples == 1000
        assert config.distribution is Distribution.UNIFORM
        assert config.target == "net"

    def test_from_config(self):
        config = SensitivityConfig.from_config({
            "sensitivity": {"samples": 10, "seed": 7, "dist": "triangular", "workers": 2},
            "evaluation": {"strict": True},
        })
        assert config.samples == 10
        assert config.seed == 7
        assert config.distribution is Distribution.TRIANGULAR
        assert config.workers == 2
        assert config.strict is True

    def test_samples_must_be_positive(self):
        with pytest.raises(StructuralError):
            SensitivityConfig(samples=0)

    @pytest.mark.parametrize(
        "kwargs",
        [{"distribution": "normal"}, {"seed": -1}, {"seed": 2 ** 64}, {"delta": 0.0}, {"workers": 0}],
    )
    def test_invalid_settings(self, kwargs):
        with pytest.raises(ConfigurationError):
            SensitivityConfig(**kwargs)


class TestStatistics:
    def test_nearest_rank_percentiles(self):
        stats = _statistics(np.arange(1.0, 101.0))
        assert stats.p5 == 5.0
        assert stats.p95 == 95.0
        assert stats.mean == 50.5
        assert stats.sd == pytest.approx(np.std(np.arange(1.0, 101.0), ddof=1))
        assert stats.samples == 100

    def test_constant_values(self):
        stats = _statistics(np.full(7, 3.3))
        assert stats.mean == 3.3
        assert stats.sd == 0.0
        assert stats.p5 == stats.p95 == 3.3

    def test_single_sample(self):
        stats = _statistics(np.array([2.0]))
        assert (stats.mean, stats.sd, stats.p5, stats.p95) == (2.0, 0.0, 2.0, 2.0)


class TestInverseCdf:
    def test_uniform(self):
        parameter = make_parameter("P_T", 0.5, low=0.2, high=0.6)
        assert _inverse_cdf(0.0, parameter, Distribution.UNIFORM) == pytest.approx(0.2)
        assert _inverse_cdf(0.5, parameter, Distribution.UNIFORM) == pytest.approx(0.4)

    def test_triangular_mode_at_point_value(self):
        parameter = make_parameter("P_T", 0.5, low=0.0, high=1.0)
        assert _inverse_cdf(0.0, parameter, Distribution.TRIANGULAR) == 0.0
        assert _inverse_cdf(0.5, parameter, Distribution.TRIANGULAR) == pytest.approx(0.5)
        assert _inverse_cdf(1.0, parameter, Distribution.TRIANGULAR) == pytest.approx(1.0)

    def test_degenerate_interval(self):
        parameter = make_parameter("P_T", 0.5, low=0.5, high=0.5)
        assert _inverse_cdf(0.7, parameter, Distribution.TRIANGULAR) == 0.5


class TestMonteCarlo:
    """Seeded propagation of uncertainty intervals through the ledger."""

    def test_reproducible(self, beijing_mc_bound):
        config = SensitivityConfig(samples=200, seed=7)
        first = monte_carlo(beijing_mc_bound, config)
        second = monte_carlo(beijing_mc_bound, config)
        assert first == second

    def test_independent_of_worker_count(self, beijing_mc_bound):
        serial = monte_carlo(beijing_mc_bound, SensitivityConfig(samples=100, seed=11, workers=1))
        threaded = monte_carlo(beijing_mc_bound, SensitivityConfig(samples=100, seed=11, workers=4))
        assert serial == threaded

    def test_seed_changes_draws(self, beijing_mc_bound):
        first, _, _ = propagate(beijing_mc_bound, SensitivityConfig(samples=100, seed=1))
        second, _, _ = propagate(beijing_mc_bound, SensitivityConfig(samples=100, seed=2))
        assert first["net"].mean != second["net"].mean

    def test_statistics_bracket_point_value(self, beijing_mc_bound):
        statistics, varied, rejections = propagate(
            beijing_mc_bound, SensitivityConfig(samples=500, seed=7)
        )
        net = statistics["net"]
        point = evaluate_model(beijing_mc_bound).ledger.net
        assert net.samples == 500
        assert net.p5 < point < net.p95
        assert net.sd > 0.0
        assert "P_T" not in varied
        assert "M" in varied
        assert rejections == 0

    def test_no_intervals_is_degenerate(self, beijing_bound):
        statistics, varied, rejections = propagate(beijing_bound, SensitivityConfig(samples=20))
        point = evaluate_model(beijing_bound).ledger
        assert varied == ()
        assert statistics["net"].mean == point.net
        assert statistics["net"].sd == 0.0
        assert statistics["eds_total"].p5 == statistics["eds_total"].p95 == point.eds_total

    def test_triangular_within_interval(self):
        bound = infra_bound(p_t=0.44, low=0.3, high=0.5)
        statistics, varied, _ = propagate(
            bound, SensitivityConfig(samples=300, seed=3, distribution="triangular")
        )
        assert varied == ("P_T",)
        assert 300.0 <= statistics["eds_total"].p5 <= statistics["eds_total"].p95 <= 500.0

    def test_rejected_draws_are_resampled(self):
        """Draws of P_T above 1 leave the kernel's domain."""
        bound = infra_bound(p_t=0.9, low=0.5, high=1.5)
        statistics, _, rejections = propagate(bound, SensitivityConfig(samples=200, seed=5))
        assert rejections > 0
        assert statistics["eds_total"].p95 <= 1000.0
        assert statistics["eds_total"].p5 >= 500.0

    def test_rejection_cap(self):
        bound = infra_bound(p_t=1.5, low=1.5, high=2.0)
        with pytest.raises(SamplingError) as exc_info:
            propagate(bound, SensitivityConfig(samples=2, seed=5))
        assert exc_info.value.cap == 200

    @pytest.mark.parametrize("workers", [1, 4])
    def test_rejection_budget_is_shared_across_draws(self, monkeypatch, workers):
        """Nearly every draw of P_T leaves [0, 1]; the run stops once 100 x samples are spent."""
        calls = []

        def counting_evaluate(*args, **kwargs):
            calls.append(1)
            return evaluate_model(*args, **kwargs)

        monkeypatch.setattr(sensitivity, "evaluate_model", counting_evaluate)
        bound = infra_bound(p_t=0.5, low=0.0, high=1000.0)
        with pytest.raises(SamplingError) as exc_info:
            propagate(bound, SensitivityConfig(samples=20, seed=3, workers=workers))
        assert exc_info.value.cap == 2000
        assert len(calls) <= 2000 + 20 + workers + 1

    def test_linear_item_mean(self):
        """eds_total = 1000 * P_T with P_T ~ U(0.3, 0.7) has mean 500."""
        n = 10_000
        bound = infra_bound(m=1000, p_t=0.5, low=0.3, high=0.7)
        statistics, _, _ = propagate(bound, SensitivityConfig(samples=n, seed=7))
        standard_error = 1000 * 0.4 / math.sqrt(12) / math.sqrt(n)
        assert abs(statistics["eds_total"].mean - 500.0) < 3 * standard_error

    def test_bit_identical_across_workers(self, beijing_mc_bound):
        serial = monte_carlo(beijing_mc_bound, SensitivityConfig(samples=1000, seed=7, workers=1))
        threaded = monte_carlo(beijing_mc_bound, SensitivityConfig(samples=1000, seed=7, workers=4))
        assert canonical_json(serial.to_dict()) == canonical_json(threaded.to_dict())

    def test_report_without_elasticities(self, beijing_mc_bound):
        report = monte_carlo(beijing_mc_bound, SensitivityConfig(samples=20, seed=7))
        assert isinstance(report, SensitivityReport)
        assert report.elasticities == {}
        assert report.samples == 20
        assert set(report.statistics) == {"es_total", "eds_total", "net"}


class TestUnitElasticity:
    """Items that are a product of their inputs have elasticity 1 in each factor."""

    @pytest.mark.parametrize(
        "item_id,param_id", [("V_I_infra", "M"), ("V_I_infra", "P_T"), ("V_D", "Pop")]
    )
    def test_multiplicative_slot(self, beijing_bound, item_id, param_id):
        elasticity = oat_elasticity(beijing_bound, param_id, delta=1e-3, target=item_id)
        assert abs(elasticity - 1.0) < 1e-6


class TestRunSensitivity:
    def test_report(self, beijing_mc_bound):
        config = SensitivityConfig(samples=50, seed=7)
        report = run_sensitivity(beijing_mc_bound, config)
        document = report.to_dict()
        assert document["seed"] == 7
        assert document["samples"] == 50
        assert document["distribution"] == "uniform"
        assert set(document["statistics"]) == {"es_total", "eds_total", "net"}
        assert document["elasticities"]["M"] < 0.0
        assert document["elasticities"]["V_Eco_reported"] > 0.0
        assert report == run_sensitivity(beijing_mc_bound, config)
