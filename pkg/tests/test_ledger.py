"""
Ledger and evaluation

Totals, composition shares and net value, evaluated both from reported
line items and from the computed disservice kernels.
"""

import random

import pytest

from core.engine import evaluate_model
from core.errors import EvaluationError, StructuralError
from core.kernels import LineItemResult
from core.ledger import build_ledger
from core.models import FunctionalClass, Side
from core.units import RMB_PER_YEAR, Quantity

ES_REPORTED = 85.5e9 + 76.3e9 + 29.7e9 + 11.6e9 + 296.8e6
EDS_REPORTED = 8.1e9 + 798.9e6 + 231.2e6


def _result(item_id, side, value, functional_class=FunctionalClass.REGULATING):
    return LineItemResult(item_id, side, functional_class, Quantity(value, RMB_PER_YEAR))


class TestBuildLedger:
    """Aggregation of line-item results."""

    def test_totals_and_net(self):
        ledger = build_ledger([
            _result("a", Side.ES, 300.0),
            _result("b", Side.ES, 100.0),
            _result("c", Side.EDS, 50.0),
        ])
        assert ledger.es_total == 400.0
        assert ledger.eds_total == 50.0
        assert ledger.net == 350.0
        assert ledger.eds_to_es_ratio == 0.125

    def test_shares_sum_to_one(self):
        ledger = build_ledger([
            _result("a", Side.ES, 300.0),
            _result("b", Side.ES, 100.0),
            _result("c", Side.EDS, 50.0),
        ])
        assert ledger.es_share == {"a": 0.75, "b": 0.25}
        assert ledger.eds_share == {"c": 1.0}

    def test_zero_side_has_zero_shares(self):
        ledger = build_ledger([_result("a", Side.ES, 0.0), _result("b", Side.EDS, 10.0)])
        assert ledger.es_share == {"a": 0.0}
        assert ledger.eds_to_es_ratio is None
        assert ledger.net == -10.0

    def test_empty_ledger(self):
        ledger = build_ledger([])
        assert (ledger.es_total, ledger.eds_total, ledger.net) == (0.0, 0.0, 0.0)
        assert ledger.eds_to_es_ratio is None

    def test_duplicate_item(self):
        with pytest.raises(StructuralError):
            build_ledger([_result("a", Side.ES, 1.0), _result("a", Side.EDS, 1.0)])

    def test_independent_of_input_order(self):
        results = [_result(f"item{i}", Side.ES if i % 3 else Side.EDS, 0.1 * (i + 1)) for i in range(30)]
        reference = build_ledger(results)
        shuffled = list(results)
        random.Random(3).shuffle(shuffled)
        assert build_ledger(shuffled) == reference

    def test_class_totals(self):
        ledger = build_ledger([
            _result("a", Side.ES, 5.0, FunctionalClass.CULTURAL),
            _result("b", Side.ES, 7.0, FunctionalClass.REGULATING),
            _result("c", Side.EDS, 2.0, FunctionalClass.PROVISIONING),
        ])
        assert ledger.class_totals["ES"] == {"Provisioning": 0.0, "Regulating": 7.0, "Cultural": 5.0}
        assert ledger.class_totals["EDS"]["Provisioning"] == 2.0


class TestReportedLedger:
    """Every Beijing line item taken as reported."""

    def test_totals(self, reported_bound):
        ledger = evaluate_model(reported_bound).ledger
        assert ledger.es_total == pytest.approx(2.033968e11, rel=1e-9)
        assert ledger.eds_total == pytest.approx(9.1301e9, rel=1e-9)
        assert ledger.net == pytest.approx(1.942667e11, rel=1e-9)

    def test_eds_is_small_share_of_es(self, reported_bound):
        ledger = evaluate_model(reported_bound).ledger
        assert ledger.eds_to_es_ratio == pytest.approx(EDS_REPORTED / ES_REPORTED, rel=1e-12)
        assert 0.044 < ledger.eds_to_es_ratio < 0.046

    def test_watering_dominates_disservices(self, reported_bound):
        ledger = evaluate_model(reported_bound).ledger
        assert max(ledger.eds_share, key=ledger.eds_share.get) == "V_W"
        assert ledger.eds_share["V_W"] == pytest.approx(8.1e9 / EDS_REPORTED)

    def test_regulating_services(self, reported_bound):
        ledger = evaluate_model(reported_bound).ledger
        assert ledger.class_totals["ES"]["Regulating"] == pytest.approx(76.3e9 + 11.6e9 + 296.8e6)


class TestPublishedFigures:
    """Ledgers agree with the published Beijing 2018 figures within their rounding."""

    def test_service_composition(self, reported_bound):
        ledger = evaluate_model(reported_bound).ledger
        assert abs(ledger.es_share["V_Eco"] - 0.420) <= 0.006
        assert abs(ledger.es_share["V_cli"] - 0.375) <= 0.006

    def test_reported_totals(self, reported_bound):
        ledger = evaluate_model(reported_bound).ledger
        assert ledger.es_total == pytest.approx(203.4e9, rel=1e-3)
        assert ledger.eds_total == pytest.approx(9.12e9, rel=2e-3)
        assert ledger.net == pytest.approx(194.3e9, rel=1e-3)

    def test_computed_disservices(self, beijing_bound):
        evaluation = evaluate_model(beijing_bound)
        assert evaluation.result("V_W").value.magnitude == pytest.approx(8.1e9, rel=1e-2)
        assert evaluation.result("V_I_infra").value.magnitude == pytest.approx(7.989e8, rel=1e-2)
        assert evaluation.result("V_D").value.magnitude == pytest.approx(2.312e8, rel=0.1)


class TestComputedLedger:
    """Beijing disservices computed from their inputs."""

    def test_disservice_items(self, beijing_bound):
        evaluation = evaluate_model(beijing_bound)
        assert evaluation.result("V_W").value.magnitude == pytest.approx(8.04504e9, rel=1e-12)
        assert evaluation.result("V_I_infra").value.magnitude == pytest.approx(8.008e8, rel=1e-12)
        assert evaluation.result("V_D").value.magnitude == pytest.approx(2.1071e8, rel=1e-4)

    def test_totals(self, beijing_bound):
        ledger = evaluate_model(beijing_bound).ledger
        assert ledger.es_total == pytest.approx(2.033968e11, rel=1e-9)
        assert ledger.eds_total == pytest.approx(9.05655e9, rel=1e-5)
        assert ledger.net == pytest.approx(1.9434e11, rel=1e-4)

    def test_results_in_item_order(self, beijing_bound):
        evaluation = evaluate_model(beijing_bound)
        ids = [r.item_id for r in evaluation.results]
        assert ids == sorted(ids)

    def test_target_values(self, beijing_bound):
        evaluation = evaluate_model(beijing_bound)
        assert evaluation.target_value("net") == evaluation.ledger.net
        assert evaluation.target_value("eds_total") == evaluation.ledger.eds_total
        assert evaluation.target_value("V_W") == evaluation.result("V_W").value.magnitude
        with pytest.raises(StructuralError):
            evaluation.target_value("V_X")

    def test_value_overrides(self, beijing_bound):
        """Point-value overrides leave the bound model untouched."""
        doubled = evaluate_model(beijing_bound, values={"M": 3.64e9})
        assert doubled.result("V_I_infra").value.magnitude == pytest.approx(1.6016e9)
        assert evaluate_model(beijing_bound).result("V_I_infra").value.magnitude == pytest.approx(8.008e8)


class TestEvaluationErrors:
    """Kernel precondition failures name the item and the offending parameter."""

    def test_share_out_of_range(self, beijing_bound):
        with pytest.raises(EvaluationError) as exc_info:
            evaluate_model(beijing_bound, values={"P_T": 1.5})
        assert exc_info.value.item_id == "V_I_infra"
        assert exc_info.value.parameter == "P_T"

    def test_disease_element_maps_to_parameter(self, beijing_bound):
        with pytest.raises(EvaluationError) as exc_info:
            evaluate_model(beijing_bound, values={"alpha_rhinitis": 2.0})
        assert exc_info.value.item_id == "V_D"
        assert exc_info.value.parameter == "alpha_rhinitis"

    def test_strict_counts(self, synthetic_bound):
        """The synthetic model lists two products and one carbon land type."""
        evaluate_model(synthetic_bound)
        with pytest.raises(EvaluationError):
            evaluate_model(synthetic_bound, strict=True)


class TestSyntheticModel:
    """Every kernel on hand-computable inputs."""

    def test_items(self, synthetic_bound):
        evaluation = evaluate_model(synthetic_bound)
        expected = {
            "air": 2000.0,
            "food": 2000.0,
            "noise": 1600.0,
            "soil": 9000.0,
            "tourism": 26000.0,
            "water": 20.0,
            "disease": 500.0,
            "infrastructure": 440.0,
            "watering": 2.0,
        }
        for item_id, value in expected.items():
            assert evaluation.result(item_id).value.magnitude == pytest.approx(value), item_id
        climate = evaluation.result("climate")
        assert climate.breakdown["V_T"].magnitude == pytest.approx(104629.63, rel=1e-7)
        assert climate.value.magnitude == pytest.approx(104629.63 + 1050.0, rel=1e-7)

    def test_totals(self, synthetic_bound):
        ledger = evaluate_model(synthetic_bound).ledger
        assert ledger.es_total == pytest.approx(146299.63, rel=1e-7)
        assert ledger.eds_total == pytest.approx(942.0)
        assert ledger.net == pytest.approx(145357.63, rel=1e-7)
        assert ledger.class_totals["ES"]["Cultural"] == pytest.approx(26000.0)
