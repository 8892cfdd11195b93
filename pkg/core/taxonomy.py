"""
esdv Cascade Taxonomy

Validates cascade graphs (structure -> function -> service/disservice ->
negative effect -> value change) and valuation models against the
final/intermediate disservice tiers and the functional classes.

Findings are returned as Violation records with stable codes so a
linter-style driver can list all of them; only malformed input (dangling
ids, unknown nodes) raises.
"""

from dataclasses import dataclass
from typing import Any, Dict, FrozenSet, List, Set, Tuple

from core.errors import StructuralError
from core.logger import get_logger
from core.models import (
    CascadeGraph,
    CascadeNode,
    DisserviceTier,
    FunctionalClass,
    NodeKind,
    Side,
    ValuationModel,
)

logger = get_logger("core.taxonomy")

# Stable violation codes
FINAL_WITHOUT_EFFECT = "E-CASCADE-A"
INTERMEDIATE_WITH_EFFECT = "E-CASCADE-B"
INTERMEDIATE_DEAD_END = "E-CASCADE-C"
EDGE_OUT_OF_ORDER = "E-CASCADE-D"
FORWARD_CYCLE = "E-CASCADE-E"
PATH_WITHOUT_VALUE_CHANGE = "E-CASCADE-F"
DOUBLE_COUNT = "E-DOUBLECOUNT"
SIDE_MISMATCH = "E-SIDE"
CLASS_MISMATCH = "E-CLASS"

PERMITTED_EDGES: Dict[NodeKind, FrozenSet[NodeKind]] = {
    NodeKind.STRUCTURE: frozenset({NodeKind.FUNCTION}),
    NodeKind.FUNCTION: frozenset({NodeKind.SERVICE, NodeKind.DISSERVICE, NodeKind.STRUCTURE}),
    NodeKind.SERVICE: frozenset({NodeKind.VALUE_CHANGE}),
    NodeKind.DISSERVICE: frozenset(
        {NodeKind.NEGATIVE_EFFECT, NodeKind.DISSERVICE, NodeKind.SERVICE}
    ),
    NodeKind.NEGATIVE_EFFECT: frozenset({NodeKind.VALUE_CHANGE}),
    NodeKind.VALUE_CHANGE: frozenset(),
}


@dataclass(frozen=True, order=True)
class Violation:
    """A single validation finding."""
    code: str
    node_ids: Tuple[str, ...]
    message: str

    def to_dict(self) -> Dict[str, Any]:
        return {"code": self.code, "node_ids": list(self.node_ids), "message": self.message}


def _is_feedback(graph: CascadeGraph, edge: Tuple[str, str]) -> bool:
    """Function -> Structure closes no valuation path."""
    src, dst = edge
    return (
        graph.nodes[src].kind is NodeKind.FUNCTION
        and graph.nodes[dst].kind is NodeKind.STRUCTURE
    )


def _forward_successors(graph: CascadeGraph) -> Dict[str, List[str]]:
    successors: Dict[str, List[str]] = {node_id: [] for node_id in graph.nodes}
    for edge in sorted(graph.edges):
        if not _is_feedback(graph, edge):
            successors[edge[0]].append(edge[1])
    return successors


def _reachable(successors: Dict[str, List[str]], start: str) -> Set[str]:
    """Nodes reachable from `start` through at least one edge."""
    seen: Set[str] = set()
    stack = list(successors[start])
    while stack:
        node_id = stack.pop()
        if node_id in seen:
            continue
        seen.add(node_id)
        stack.extend(successors[node_id])
    return seen


def _check_endpoints(graph: CascadeGraph) -> None:
    for src, dst in sorted(graph.edges):
        for node_id in (src, dst):
            if node_id not in graph.nodes:
                raise StructuralError(
                    f"edge {src} -> {dst} references unknown node {node_id!r}", ref=node_id
                )


def _cycles(graph: CascadeGraph, successors: Dict[str, List[str]]) -> List[Tuple[str, ...]]:
    """Strongly connected groups of forward edges that contain a cycle."""
    reach = {node_id: _reachable(successors, node_id) for node_id in graph.nodes}
    cyclic = sorted(node_id for node_id in graph.nodes if node_id in reach[node_id])
    groups = set()
    for node_id in cyclic:
        group = tuple(
            sorted(
                other
                for other in cyclic
                if other == node_id or (other in reach[node_id] and node_id in reach[other])
            )
        )
        groups.add(group)
    return sorted(groups)


def validate_cascade(graph: CascadeGraph) -> List[Violation]:
    """
    Check a cascade graph against the tier rules and the cascade order.

    Returns:
        Sorted list of violations; empty means valid

    Raises:
        StructuralError: if an edge references an unknown node
    """
    _check_endpoints(graph)
    violations: List[Violation] = []
    nodes = graph.nodes

    for src, dst in sorted(graph.edges):
        if nodes[dst].kind not in PERMITTED_EDGES[nodes[src].kind]:
            violations.append(Violation(
                EDGE_OUT_OF_ORDER,
                (src, dst),
                f"edge {nodes[src].kind.value} -> {nodes[dst].kind.value} is outside the cascade order",
            ))

    successors = _forward_successors(graph)

    for node_id in sorted(nodes):
        node = nodes[node_id]
        targets = graph.successors(node_id)
        effects = [t for t in targets if nodes[t].kind is NodeKind.NEGATIVE_EFFECT]

        if node.kind is NodeKind.DISSERVICE and node.tier is DisserviceTier.FINAL:
            if not effects:
                violations.append(Violation(
                    FINAL_WITHOUT_EFFECT,
                    (node_id,),
                    f"final disservice {node_id!r} causes no negative effect",
                ))

        elif node.kind is NodeKind.DISSERVICE and node.tier is DisserviceTier.INTERMEDIATE:
            for effect in effects:
                violations.append(Violation(
                    INTERMEDIATE_WITH_EFFECT,
                    (node_id, effect),
                    f"intermediate disservice {node_id!r} links directly to negative effect {effect!r}",
                ))
            reached = _reachable(successors, node_id)
            if not any(
                nodes[r].kind is NodeKind.SERVICE
                or (nodes[r].kind is NodeKind.DISSERVICE and nodes[r].tier is DisserviceTier.FINAL)
                for r in reached
            ):
                violations.append(Violation(
                    INTERMEDIATE_DEAD_END,
                    (node_id,),
                    f"intermediate disservice {node_id!r} reaches no final disservice or service",
                ))

        elif node.kind in (NodeKind.SERVICE, NodeKind.NEGATIVE_EFFECT):
            if not any(nodes[t].kind is NodeKind.VALUE_CHANGE for t in targets):
                violations.append(Violation(
                    PATH_WITHOUT_VALUE_CHANGE,
                    (node_id,),
                    f"{node.kind.value} {node_id!r} does not lead to a value change",
                ))

    for group in _cycles(graph, successors):
        violations.append(Violation(
            FORWARD_CYCLE, group, f"cycle among forward edges: {', '.join(group)}"
        ))

    logger.debug("Cascade validated", nodes=len(nodes), violations=len(violations))
    return sorted(violations)


def _item_node(graph: CascadeGraph, item_id: str, node_id: str) -> CascadeNode:
    node = graph.nodes.get(node_id)
    if node is None:
        raise StructuralError(
            f"item {item_id!r} references unknown cascade node {node_id!r}", ref=node_id
        )
    return node


def check_double_counting(graph: CascadeGraph, model: ValuationModel) -> List[Violation]:
    """
    Flag line items that value an intermediate disservice.

    Intermediate values are embedded in the final disservices and
    services they act through; valuing them again double counts.

    Raises:
        StructuralError: if a line item references an unknown node
    """
    violations = []
    for item in sorted(model.items, key=lambda i: i.item_id):
        node = _item_node(graph, item.item_id, item.node)
        if node.kind is NodeKind.DISSERVICE and node.tier is DisserviceTier.INTERMEDIATE:
            violations.append(Violation(
                DOUBLE_COUNT,
                (item.item_id, node.node_id),
                f"item {item.item_id!r} values intermediate disservice {node.node_id!r}",
            ))
    return sorted(violations)


def check_classification(graph: CascadeGraph, model: ValuationModel) -> List[Violation]:
    """
    Check that each item's ledger side and functional class agree with
    the cascade node it values.

    Raises:
        StructuralError: if a line item references an unknown node
    """
    violations = []
    expected_kind = {Side.ES: NodeKind.SERVICE, Side.EDS: NodeKind.DISSERVICE}
    for item in sorted(model.items, key=lambda i: i.item_id):
        node = _item_node(graph, item.item_id, item.node)
        if node.kind is not expected_kind[item.side]:
            violations.append(Violation(
                SIDE_MISMATCH,
                (item.item_id, node.node_id),
                f"{item.side.value} item {item.item_id!r} is bound to {node.kind.value} node {node.node_id!r}",
            ))
        if node.functional_class is not None and node.functional_class is not item.functional_class:
            violations.append(Violation(
                CLASS_MISMATCH,
                (item.item_id, node.node_id),
                f"item {item.item_id!r} is {item.functional_class.value} but node "
                f"{node.node_id!r} is {node.functional_class.value}",
            ))
    return sorted(violations)


def validate_model(model: ValuationModel) -> List[Violation]:
    """Run every taxonomy check against a model's embedded cascade."""
    graph = model.cascade
    return sorted(
        validate_cascade(graph)
        + check_double_counting(graph, model)
        + check_classification(graph, model)
    )


# -- Reference cascades -------------------------------------------------------

def _node(node_id: str, kind: NodeKind, label: str, **kwargs: Any) -> CascadeNode:
    return CascadeNode(node_id, kind, label, **kwargs)


def disservice_pathways() -> CascadeGraph:
    """
    Pathways of three common urban disservices: infrastructure damage,
    decrease in water quantity, and diseases or injuries, each a final
    disservice causing a financial cost.
    """
    final = DisserviceTier.FINAL
    nodes = [
        _node("urban_vegetation", NodeKind.STRUCTURE, "Urban trees, shrubs and grass"),
        _node("urban_wildlife", NodeKind.STRUCTURE, "Urban wildlife"),
        _node("root_growth", NodeKind.FUNCTION, "Root growth"),
        _node("transpiration", NodeKind.FUNCTION, "Plant water uptake and transpiration"),
        _node("pollen_release", NodeKind.FUNCTION, "Pollen release and wildlife contact"),
        _node("infrastructure_damage", NodeKind.DISSERVICE, "Infrastructure damage",
              tier=final, functional_class=FunctionalClass.REGULATING),
        _node("water_quantity_decrease", NodeKind.DISSERVICE, "Decrease in water quantity",
              tier=final, functional_class=FunctionalClass.PROVISIONING),
        _node("diseases_injuries", NodeKind.DISSERVICE, "Diseases or injuries",
              tier=final, functional_class=FunctionalClass.REGULATING),
        _node("repair_costs", NodeKind.NEGATIVE_EFFECT, "Repair costs"),
        _node("watering_costs", NodeKind.NEGATIVE_EFFECT, "Artificial watering costs"),
        _node("medical_costs", NodeKind.NEGATIVE_EFFECT, "Medical costs"),
        _node("value_loss", NodeKind.VALUE_CHANGE, "Loss of value"),
    ]
    edges = [
        ("urban_vegetation", "root_growth"),
        ("urban_vegetation", "transpiration"),
        ("urban_vegetation", "pollen_release"),
        ("urban_wildlife", "pollen_release"),
        ("root_growth", "infrastructure_damage"),
        ("transpiration", "water_quantity_decrease"),
        ("pollen_release", "diseases_injuries"),
        ("infrastructure_damage", "repair_costs"),
        ("water_quantity_decrease", "watering_costs"),
        ("diseases_injuries", "medical_costs"),
        ("repair_costs", "value_loss"),
        ("watering_costs", "value_loss"),
        ("medical_costs", "value_loss"),
    ]
    return CascadeGraph.build(nodes, edges)


def urban_green_cascade() -> CascadeGraph:
    """
    The disservice pathways extended with the five valued services and
    the intermediate disservices that act through them, including the
    invasive-species feedback onto ecosystem structure.
    """
    base = disservice_pathways()
    intermediate = DisserviceTier.INTERMEDIATE
    nodes: List[CascadeNode] = list(base.nodes.values()) + [
        _node("photosynthesis", NodeKind.FUNCTION, "Photosynthesis and biomass growth"),
        _node("pollutant_filtering", NodeKind.FUNCTION, "Pollutant and noise filtering"),
        _node("habitat_provision", NodeKind.FUNCTION, "Habitat and landscape provision"),
        _node("species_spread", NodeKind.FUNCTION, "Spread of introduced species"),
        _node("nutrient_uptake", NodeKind.FUNCTION, "Nutrient uptake"),
        _node("voc_emission", NodeKind.FUNCTION, "Volatile organic compound emission"),
        _node("leaching", NodeKind.FUNCTION, "Leaching of litter and fertilizer"),
        _node("food_raw_material", NodeKind.SERVICE, "Food and raw material production",
              functional_class=FunctionalClass.PROVISIONING),
        _node("climate_regulation", NodeKind.SERVICE, "Climate regulation",
              functional_class=FunctionalClass.REGULATING),
        _node("environmental_quality", NodeKind.SERVICE, "Environmental quality regulation",
              functional_class=FunctionalClass.REGULATING),
        _node("soil_retention", NodeKind.SERVICE, "Soil retention",
              functional_class=FunctionalClass.REGULATING),
        _node("ecotourism", NodeKind.SERVICE, "Ecotourism",
              functional_class=FunctionalClass.CULTURAL),
        _node("invasive_species_introduction", NodeKind.DISSERVICE,
              "Introduction of invasive species", tier=intermediate),
        _node("endemic_species_displacement", NodeKind.DISSERVICE,
              "Displacement of endemic species", tier=intermediate),
        _node("soil_nutrient_decrease", NodeKind.DISSERVICE,
              "Decrease in soil nutrients", tier=intermediate),
        _node("air_quality_decrease", NodeKind.DISSERVICE,
              "Decrease in air quality", tier=intermediate),
        _node("water_quality_decrease", NodeKind.DISSERVICE,
              "Decrease in water quality", tier=intermediate),
        _node("value_gain", NodeKind.VALUE_CHANGE, "Gain of value"),
    ]
    edges: List[Tuple[str, str]] = sorted(base.edges) + [
        ("urban_vegetation", "photosynthesis"),
        ("urban_vegetation", "pollutant_filtering"),
        ("urban_vegetation", "habitat_provision"),
        ("urban_vegetation", "nutrient_uptake"),
        ("urban_vegetation", "voc_emission"),
        ("urban_vegetation", "leaching"),
        ("urban_wildlife", "habitat_provision"),
        ("urban_wildlife", "species_spread"),
        ("photosynthesis", "food_raw_material"),
        ("photosynthesis", "climate_regulation"),
        ("transpiration", "climate_regulation"),
        ("pollutant_filtering", "environmental_quality"),
        ("root_growth", "soil_retention"),
        ("habitat_provision", "ecotourism"),
        ("species_spread", "invasive_species_introduction"),
        ("species_spread", "urban_vegetation"),
        ("nutrient_uptake", "soil_nutrient_decrease"),
        ("voc_emission", "air_quality_decrease"),
        ("leaching", "water_quality_decrease"),
        ("invasive_species_introduction", "endemic_species_displacement"),
        ("invasive_species_introduction", "water_quantity_decrease"),
        ("endemic_species_displacement", "ecotourism"),
        ("soil_nutrient_decrease", "food_raw_material"),
        ("air_quality_decrease", "diseases_injuries"),
        ("water_quality_decrease", "environmental_quality"),
        ("food_raw_material", "value_gain"),
        ("climate_regulation", "value_gain"),
        ("environmental_quality", "value_gain"),
        ("soil_retention", "value_gain"),
        ("ecotourism", "value_gain"),
    ]
    return CascadeGraph.build(nodes, edges)

