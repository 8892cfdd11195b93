"""Shared test fixtures for esdv tests."""

import json
from pathlib import Path
from typing import Any, Dict, Optional

import pytest

from core.ingest import BoundModel, bind, load_inputs
from core.models import (
    FunctionalClass,
    LineItem,
    Parameter,
    ParameterSet,
    Provenance,
    ProvenanceMethod,
    Side,
    ValuationModel,
)
from core.taxonomy import disservice_pathways
from core.units import Quantity, parse_unit

DATA_DIR = Path(__file__).resolve().parent.parent / "data"

BEIJING_MANIFEST = DATA_DIR / "beijing2018.json"
BEIJING_REPORTED_MANIFEST = DATA_DIR / "beijing2018_reported.json"
BEIJING_PARAMS = DATA_DIR / "beijing2018_params.csv"
BEIJING_PARAMS_MC = DATA_DIR / "beijing2018_params_mc.csv"
SYNTHETIC_MANIFEST = DATA_DIR / "synthetic_demo.json"
SYNTHETIC_PARAMS = DATA_DIR / "synthetic_demo_params.csv"


def q(magnitude: float, unit: str) -> Quantity:
    """Quantity from a unit expression, normalized to scale 1."""
    return Quantity.parse(magnitude, unit)


def make_parameter(
    param_id: str,
    magnitude: float,
    unit: str = "one",
    low: Optional[float] = None,
    high: Optional[float] = None,
    method: ProvenanceMethod = ProvenanceMethod.CONSTANT,
) -> Parameter:
    """Helper to create parameters; magnitude and interval are in `unit`."""
    return Parameter(
        param_id=param_id,
        quantity=Quantity(magnitude, parse_unit(unit)),
        provenance=Provenance("test", 2020, method),
        uncertainty=(low, high) if low is not None else None,
    )


def infra_model(item_id: str = "infra") -> ValuationModel:
    """One infrastructure-damage item on the disservice pathways."""
    return ValuationModel(
        region="Test",
        year=2020,
        items=(
            LineItem(
                item_id=item_id,
                kernel="infra_damage",
                side=Side.EDS,
                functional_class=FunctionalClass.REGULATING,
                node="infrastructure_damage",
                slots={"M": "M", "P_T": "P_T"},
            ),
        ),
        cascade=disservice_pathways(),
    )


def infra_bound(
    m: float = 1000.0, p_t: float = 0.44, low: Optional[float] = None, high: Optional[float] = None
) -> BoundModel:
    """Bound single-item model; the interval, when given, is on P_T."""
    params = ParameterSet.from_parameters([
        make_parameter("M", m, "RMB/year"),
        make_parameter("P_T", p_t, "one", low, high),
    ])
    return bind(infra_model(), params)


def load_bound(manifest: Path, params: Path) -> BoundModel:
    model, parameters = load_inputs(manifest.read_bytes(), params.read_bytes())
    return bind(model, parameters)


def manifest_dict(path: Path = BEIJING_MANIFEST) -> Dict[str, Any]:
    return json.loads(path.read_text(encoding="utf-8"))


def manifest_bytes(document: Dict[str, Any]) -> bytes:
    return json.dumps(document).encode("utf-8")


@pytest.fixture
def beijing_bound():
    """Beijing 2018 model with the three disservices computed from inputs."""
    return load_bound(BEIJING_MANIFEST, BEIJING_PARAMS)


@pytest.fixture
def beijing_mc_bound():
    """Beijing 2018 model with illustrative uncertainty intervals."""
    return load_bound(BEIJING_MANIFEST, BEIJING_PARAMS_MC)


@pytest.fixture
def reported_bound():
    """Beijing 2018 model with every line item taken as reported."""
    return load_bound(BEIJING_REPORTED_MANIFEST, BEIJING_PARAMS)


@pytest.fixture
def synthetic_bound():
    """Synthetic model exercising every service and disservice kernel."""
    return load_bound(SYNTHETIC_MANIFEST, SYNTHETIC_PARAMS)
