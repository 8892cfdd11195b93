"""
esdv Data Models

Core records shared by every module: dimensioned parameters with
provenance, the cascade graph, valuation line items and models, and the
donor records used for value transfer. All records are immutable after
construction.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import (
    Any,
    Dict,
    FrozenSet,
    Iterable,
    Iterator,
    List,
    Mapping,
    Optional,
    Tuple,
    Union,
)

from core.errors import DimensionError, DomainError, StructuralError
from core.units import Quantity, format_unit
from core.validation import require_finite, validate_identifier


class ProvenanceMethod(Enum):
    """How a parameter value was obtained."""
    STATISTIC = "statistic"       # Government-released statistics
    LOCAL_STUDY = "local_study"   # Local survey or study
    TRANSFER = "transfer"         # Value transfer from donor sites
    CONSTANT = "constant"         # Physical constant or definition


class NodeKind(Enum):
    """Node kinds of the ecosystem cascade."""
    STRUCTURE = "EcosystemStructure"
    FUNCTION = "EcosystemFunction"
    SERVICE = "Service"
    DISSERVICE = "Disservice"
    NEGATIVE_EFFECT = "NegativeEffect"
    VALUE_CHANGE = "ValueChange"


class DisserviceTier(Enum):
    """Final disservices act on wellbeing directly; intermediate ones only
    through final disservices or reduced services."""
    FINAL = "Final"
    INTERMEDIATE = "Intermediate"


class FunctionalClass(Enum):
    """Functional classification shared by services and disservices.

    There is no Supporting class.
    """
    PROVISIONING = "Provisioning"
    REGULATING = "Regulating"
    CULTURAL = "Cultural"


class Side(Enum):
    """Ledger side of a line item."""
    ES = "ES"
    EDS = "EDS"


@dataclass(frozen=True)
class Provenance:
    """Where a parameter value comes from."""
    source: str
    year: int
    method: ProvenanceMethod

    def to_dict(self) -> Dict[str, Any]:
        return {"source": self.source, "year": self.year, "method": self.method.value}


@dataclass(frozen=True)
class Parameter:
    """
    A named, dimensioned input with provenance and an optional
    uncertainty interval expressed in the same unit.

    The quantity and the interval are normalized to scale 1 on
    construction.
    """
    param_id: str
    quantity: Quantity
    provenance: Provenance
    uncertainty: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        validate_identifier(self.param_id, "parameter id")
        scale = self.quantity.unit.scale
        if self.uncertainty is not None:
            low, high = (require_finite(float(v), self.param_id) for v in self.uncertainty)
            if scale != 1:
                low, high = float(Fraction(low) * scale), float(Fraction(high) * scale)
            object.__setattr__(self, "uncertainty", (low, high))
        object.__setattr__(self, "quantity", self.quantity.normalized())
        if self.uncertainty is not None:
            low, high = self.uncertainty
            if not low <= self.quantity.magnitude <= high:
                raise DomainError(
                    f"{self.param_id}: interval [{low}, {high}] does not contain "
                    f"{self.quantity.magnitude}",
                    slot=self.param_id,
                    value=self.quantity.magnitude,
                )

    @property
    def value(self) -> float:
        return self.quantity.magnitude

    @property
    def has_interval(self) -> bool:
        """True when the uncertainty interval is present and nondegenerate."""
        return self.uncertainty is not None and self.uncertainty[0] < self.uncertainty[1]

    def with_magnitude(self, magnitude: float) -> "Parameter":
        """Same parameter at another point value; the interval is dropped."""
        return replace(self, quantity=self.quantity.with_magnitude(magnitude), uncertainty=None)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.param_id,
            "value": self.quantity.magnitude,
            "unit": format_unit(self.quantity.unit),
            "provenance": self.provenance.to_dict(),
            "uncertainty": list(self.uncertainty) if self.uncertainty else None,
        }


@dataclass(frozen=True)
class ParameterSet:
    """Parameters keyed by id plus dataset metadata."""
    parameters: Mapping[str, Parameter] = field(default_factory=dict)
    region: Optional[str] = None
    reference_year: Optional[int] = None

    @classmethod
    def from_parameters(
        cls,
        parameters: Iterable[Parameter],
        region: Optional[str] = None,
        reference_year: Optional[int] = None,
    ) -> "ParameterSet":
        """Build a set, rejecting duplicate ids."""
        by_id: Dict[str, Parameter] = {}
        for parameter in parameters:
            if parameter.param_id in by_id:
                raise StructuralError(
                    f"duplicate parameter id {parameter.param_id!r}", ref=parameter.param_id
                )
            by_id[parameter.param_id] = parameter
        return cls(by_id, region, reference_year)

    def __contains__(self, param_id: object) -> bool:
        return param_id in self.parameters

    def __getitem__(self, param_id: str) -> Parameter:
        return self.parameters[param_id]

    def __iter__(self) -> Iterator[Parameter]:
        for param_id in self.ids():
            yield self.parameters[param_id]

    def __len__(self) -> int:
        return len(self.parameters)

    def get(self, param_id: str) -> Optional[Parameter]:
        return self.parameters.get(param_id)

    def ids(self) -> List[str]:
        return sorted(self.parameters)

    def with_parameters(self, extra: Iterable[Parameter]) -> "ParameterSet":
        """Add parameters; an id already present is a structural error."""
        merged = dict(self.parameters)
        for parameter in extra:
            if parameter.param_id in merged:
                raise StructuralError(
                    f"parameter {parameter.param_id!r} already defined", ref=parameter.param_id
                )
            merged[parameter.param_id] = parameter
        return ParameterSet(merged, self.region, self.reference_year)

    def with_values(self, values: Mapping[str, float]) -> "ParameterSet":
        """Replace point values of the named parameters (units unchanged)."""
        merged = dict(self.parameters)
        for param_id, magnitude in values.items():
            merged[param_id] = merged[param_id].with_magnitude(magnitude)
        return ParameterSet(merged, self.region, self.reference_year)

    def with_metadata(self, region: Optional[str], reference_year: Optional[int]) -> "ParameterSet":
        return ParameterSet(self.parameters, region, reference_year)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ParameterSet):
            return NotImplemented
        return (
            dict(self.parameters) == dict(other.parameters)
            and self.region == other.region
            and self.reference_year == other.reference_year
        )


@dataclass(frozen=True)
class CascadeNode:
    """A node of the cascade graph."""
    node_id: str
    kind: NodeKind
    label: str = ""
    tier: Optional[DisserviceTier] = None
    functional_class: Optional[FunctionalClass] = None

    def __post_init__(self):
        validate_identifier(self.node_id, "node id")
        if self.kind is NodeKind.DISSERVICE and self.tier is None:
            raise StructuralError(f"disservice {self.node_id!r} has no tier", ref=self.node_id)
        if self.kind is not NodeKind.DISSERVICE and self.tier is not None:
            raise StructuralError(
                f"tier given on non-disservice node {self.node_id!r}", ref=self.node_id
            )
        if self.functional_class is not None and self.kind not in (
            NodeKind.SERVICE,
            NodeKind.DISSERVICE,
        ):
            raise StructuralError(
                f"functional class given on {self.kind.value} node {self.node_id!r}",
                ref=self.node_id,
            )


@dataclass(frozen=True)
class CascadeGraph:
    """Typed graph of cascade nodes; edges are (from-id, to-id) pairs."""
    nodes: Mapping[str, CascadeNode] = field(default_factory=dict)
    edges: FrozenSet[Tuple[str, str]] = frozenset()

    @classmethod
    def build(
        cls,
        nodes: Iterable[CascadeNode],
        edges: Iterable[Tuple[str, str]] = (),
    ) -> "CascadeGraph":
        """Build a graph, rejecting duplicate node ids.

        Edge endpoints are not checked here; validate_cascade does that.
        """
        by_id: Dict[str, CascadeNode] = {}
        for node in nodes:
            if node.node_id in by_id:
                raise StructuralError(f"duplicate node id {node.node_id!r}", ref=node.node_id)
            by_id[node.node_id] = node
        return cls(by_id, frozenset((a, b) for a, b in edges))

    def successors(self, node_id: str) -> List[str]:
        return sorted(b for a, b in self.edges if a == node_id)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CascadeGraph):
            return NotImplemented
        return dict(self.nodes) == dict(other.nodes) and self.edges == other.edges


# A variadic slot is a sequence of per-element field->parameter-id mappings
SlotBinding = Union[str, Tuple[Mapping[str, str], ...]]


@dataclass(frozen=True)
class LineItem:
    """One valued entry of the ledger: a kernel bound to named parameters."""
    item_id: str
    kernel: str
    side: Side
    functional_class: FunctionalClass
    node: str
    slots: Mapping[str, SlotBinding] = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        validate_identifier(self.item_id, "item id")

    def parameter_ids(self) -> List[str]:
        """Every parameter id referenced by the slots, sorted and unique."""
        ids = set()
        for binding in self.slots.values():
            if isinstance(binding, str):
                ids.add(binding)
            else:
                for element in binding:
                    ids.update(element.values())
        return sorted(ids)


@dataclass(frozen=True)
class DonorObservation:
    """One donor-site observation: numerator and denominator share a dimension."""
    site: str
    numerator: Quantity
    denominator: Quantity

    def __post_init__(self):
        if not self.numerator.unit.compatible(self.denominator.unit):
            raise DimensionError(
                f"donor {self.site!r}: numerator and denominator differ in dimension",
                expected=format_unit(self.denominator.unit.normalized()),
                actual=format_unit(self.numerator.unit.normalized()),
            )


@dataclass(frozen=True)
class Adjustment:
    """A labelled multiplicative adjustment factor (> 0)."""
    label: str
    factor: float

    def __post_init__(self):
        factor = require_finite(float(self.factor), self.label)
        if factor <= 0.0:
            raise DomainError(
                f"adjustment {self.label!r} must be > 0, got {factor}",
                slot=self.label,
                value=factor,
            )
        object.__setattr__(self, "factor", factor)


@dataclass(frozen=True)
class TransferRecord:
    """Donor observations and adjustments producing one derived parameter."""
    derived_id: str
    observations: Tuple[DonorObservation, ...]
    adjustments: Tuple[Adjustment, ...] = ()
    source: str = "value transfer"
    year: Optional[int] = None

    def __post_init__(self):
        validate_identifier(self.derived_id, "derived id")


@dataclass(frozen=True)
class ValuationModel:
    """A manifest of line items with its cascade graph and transfers."""
    region: str
    year: int
    items: Tuple[LineItem, ...] = ()
    cascade: CascadeGraph = field(default_factory=CascadeGraph)
    transfers: Tuple[TransferRecord, ...] = ()

    def __post_init__(self):
        seen = set()
        for item in self.items:
            if item.item_id in seen:
                raise StructuralError(f"duplicate item id {item.item_id!r}", ref=item.item_id)
            seen.add(item.item_id)

    def item(self, item_id: str) -> LineItem:
        for item in self.items:
            if item.item_id == item_id:
                return item
        raise StructuralError(f"unknown item {item_id!r}", ref=item_id)
