"""
esdv Ingest

Loads the two input artifacts, a parameter table (CSV) and a model
manifest (JSON), and binds parameters to kernel slots with dimension
checking.

Parameter CSV header:
    id,value,unit,source,year,method,low,high

Model manifest:
    {"region": str, "year": int,
     "cascade": {"nodes": [{id, kind, tier?, class?, label?}], "edges": [[from, to]]},
     "transfers": [{id, source?, year?, observations: [{site, numerator, denominator, unit}],
                    adjustments: [{label, factor}]}],
     "items": [{id, kernel, side, class, node, label?, slots: {...}}]}

Scalar slots map to a parameter id; variadic slots map to a list of
objects, one per element, mapping each field to a parameter id.

Missing data is always an error, never an implicit zero.
"""

import csv
import io
import json
import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Tuple

from core.errors import (
    BindingError,
    DomainError,
    EsdvError,
    LoadError,
    StructuralError,
    UnitParseError,
)
from core.kernels import KERNELS, Kernel
from core.logger import get_logger
from core.models import (
    Adjustment,
    CascadeGraph,
    CascadeNode,
    DisserviceTier,
    DonorObservation,
    FunctionalClass,
    LineItem,
    NodeKind,
    Parameter,
    ParameterSet,
    Provenance,
    ProvenanceMethod,
    Side,
    TransferRecord,
    ValuationModel,
)
from core.transfer import ratio_from_donors
from core.units import Quantity, UnitDim, format_unit, parse_unit

logger = get_logger("core.ingest")

CSV_HEADER = ["id", "value", "unit", "source", "year", "method", "low", "high"]

MISSING_PARAMETER = "E-BIND-MISSING"
DIMENSION_MISMATCH = "E-BIND-DIMENSION"
UNKNOWN_KERNEL = "E-BIND-KERNEL"
UNBOUND_SLOT = "E-BIND-SLOT"

_ELEMENT_SLOT = re.compile(r"^(?P<name>\w+)\[(?P<index>\d+)\]\.(?P<field>\w+)$")


# -- Parameter CSV -------------------------------------------------------------

def _exact(text: str, scale: Fraction, row: int, column: str) -> float:
    """Decimal text times an exact unit scale, rounded once to a double."""
    try:
        number = Decimal(text.strip())
    except InvalidOperation:
        raise LoadError(f"{column} is not a number", row=row, token=text) from None
    if not number.is_finite():
        raise LoadError(f"{column} must be finite", row=row, token=text)
    return float(Fraction(number) * scale)


def _parse_row(fields: List[str], row: int) -> Parameter:
    if len(fields) != len(CSV_HEADER):
        raise LoadError(f"expected {len(CSV_HEADER)} fields, got {len(fields)}", row=row)
    param_id, value, unit_text, source, year, method, low, high = fields

    try:
        unit = parse_unit(unit_text)
    except UnitParseError as exc:
        raise LoadError(exc.message, row=row, token=exc.token) from exc

    magnitude = _exact(value, unit.scale, row, "value")

    try:
        year_value = int(year)
    except ValueError:
        raise LoadError("year is not an integer", row=row, token=year) from None

    try:
        provenance_method = ProvenanceMethod(method.strip())
    except ValueError:
        raise LoadError("unknown provenance method", row=row, token=method) from None

    uncertainty = None
    if low.strip() or high.strip():
        if not (low.strip() and high.strip()):
            raise LoadError("low and high must both be given or both be empty", row=row)
        bounds = (_exact(low, unit.scale, row, "low"), _exact(high, unit.scale, row, "high"))
        if bounds[0] > bounds[1]:
            raise LoadError(f"low {low} exceeds high {high}", row=row)
        uncertainty = bounds

    try:
        return Parameter(
            param_id=param_id,
            quantity=Quantity(magnitude, unit.normalized()),
            provenance=Provenance(source, year_value, provenance_method),
            uncertainty=uncertainty,
        )
    except EsdvError as exc:
        raise LoadError(exc.message, row=row, token=param_id) from exc


def parse_params_csv(data: bytes) -> ParameterSet:
    """
    Parse a parameter table.

    Values are read as exact decimals and folded with the unit scale
    before rounding, so ``1.82,billion RMB/year`` is exactly 1.82e9.

    Raises:
        LoadError: naming the 1-based line number of the offending row
    """
    try:
        text = data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise LoadError(f"not UTF-8: {exc.reason}") from exc

    reader = csv.reader(io.StringIO(text, newline=""))
    header = next(reader, None)
    if header != CSV_HEADER:
        raise LoadError(f"header must be {','.join(CSV_HEADER)}", row=1)

    parameters: Dict[str, Parameter] = {}
    for fields in reader:
        if not fields:
            continue
        row = reader.line_num
        parameter = _parse_row(fields, row)
        if parameter.param_id in parameters:
            raise LoadError("duplicate parameter id", row=row, token=parameter.param_id)
        parameters[parameter.param_id] = parameter

    logger.info("Parameters loaded", count=len(parameters))
    return ParameterSet(parameters)


def serialize_params_csv(params: ParameterSet) -> bytes:
    """Write parameters sorted by id; floats use their shortest round-trip form."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for parameter in params:
        low, high = parameter.uncertainty if parameter.uncertainty else ("", "")
        writer.writerow([
            parameter.param_id,
            repr(parameter.value),
            format_unit(parameter.quantity.unit),
            parameter.provenance.source,
            parameter.provenance.year,
            parameter.provenance.method.value,
            repr(low) if parameter.uncertainty else "",
            repr(high) if parameter.uncertainty else "",
        ])
    return buffer.getvalue().encode("utf-8")


# -- Model manifest ------------------------------------------------------------

def _require(obj: Mapping[str, Any], key: str, kind: type, path: str) -> Any:
    if key not in obj:
        raise LoadError(f"missing required field {key!r}", path=path)
    value = obj[key]
    if kind is int and isinstance(value, bool):
        raise LoadError(f"field {key!r} must be an integer", path=f"{path}.{key}")
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, kind):
        raise LoadError(f"field {key!r} must be {kind.__name__}", path=f"{path}.{key}")
    return value


def _optional(obj: Mapping[str, Any], key: str, kind: type, path: str, default: Any) -> Any:
    if obj.get(key) is None:
        return default
    return _require(obj, key, kind, path)


def _enum(enum_type: Any, token: str, path: str) -> Any:
    try:
        return enum_type(token)
    except ValueError:
        allowed = ", ".join(m.value for m in enum_type)
        raise LoadError(f"{token!r} is not one of {allowed}", path=path) from None


def _functional_class(token: str, path: str) -> FunctionalClass:
    if token == "Supporting":
        raise LoadError("there is no Supporting class", path=path)
    return _enum(FunctionalClass, token, path)


def _objects(obj: Mapping[str, Any], key: str, path: str, required: bool = True) -> List[Any]:
    if not required and key not in obj:
        return []
    values = _require(obj, key, list, path)
    for i, value in enumerate(values):
        if not isinstance(value, dict):
            raise LoadError("entry must be an object", path=f"{path}.{key}[{i}]")
    return values


def _parse_cascade(raw: Mapping[str, Any], path: str) -> CascadeGraph:
    nodes: List[CascadeNode] = []
    seen = set()
    for i, entry in enumerate(_objects(raw, "nodes", path)):
        node_path = f"{path}.nodes[{i}]"
        node_id = _require(entry, "id", str, node_path)
        if node_id in seen:
            raise LoadError(f"duplicate node id {node_id!r}", path=f"{node_path}.id")
        seen.add(node_id)
        kind = _enum(NodeKind, _require(entry, "kind", str, node_path), f"{node_path}.kind")
        tier = entry.get("tier")
        fclass = entry.get("class")
        try:
            nodes.append(CascadeNode(
                node_id=node_id,
                kind=kind,
                label=_optional(entry, "label", str, node_path, ""),
                tier=_enum(DisserviceTier, tier, f"{node_path}.tier") if tier is not None else None,
                functional_class=(
                    _functional_class(fclass, f"{node_path}.class") if fclass is not None else None
                ),
            ))
        except StructuralError as exc:
            raise LoadError(exc.message, path=node_path) from exc

    edges: List[Tuple[str, str]] = []
    for i, edge in enumerate(_require(raw, "edges", list, path)):
        edge_path = f"{path}.edges[{i}]"
        if not (isinstance(edge, list) and len(edge) == 2 and all(isinstance(e, str) for e in edge)):
            raise LoadError("edge must be a [from, to] pair of node ids", path=edge_path)
        for end in edge:
            if end not in seen:
                raise LoadError(f"edge references unknown node {end!r}", path=edge_path)
        edges.append((edge[0], edge[1]))

    return CascadeGraph.build(nodes, edges)


def _parse_transfer(raw: Mapping[str, Any], path: str) -> TransferRecord:
    observations = []
    for i, entry in enumerate(_objects(raw, "observations", path)):
        obs_path = f"{path}.observations[{i}]"
        try:
            unit = parse_unit(_require(entry, "unit", str, obs_path))
        except UnitParseError as exc:
            raise LoadError(exc.message, path=f"{obs_path}.unit", token=exc.token) from exc
        observations.append(DonorObservation(
            site=_require(entry, "site", str, obs_path),
            numerator=Quantity(_require(entry, "numerator", float, obs_path), unit).normalized(),
            denominator=Quantity(_require(entry, "denominator", float, obs_path), unit).normalized(),
        ))

    adjustments = []
    for i, entry in enumerate(_objects(raw, "adjustments", path, required=False)):
        adj_path = f"{path}.adjustments[{i}]"
        try:
            adjustments.append(Adjustment(
                _require(entry, "label", str, adj_path),
                _require(entry, "factor", float, adj_path),
            ))
        except DomainError as exc:
            raise LoadError(exc.message, path=f"{adj_path}.factor") from exc

    try:
        return TransferRecord(
            derived_id=_require(raw, "id", str, path),
            observations=tuple(observations),
            adjustments=tuple(adjustments),
            source=_optional(raw, "source", str, path, "value transfer"),
            year=_optional(raw, "year", int, path, None),
        )
    except StructuralError as exc:
        raise LoadError(exc.message, path=f"{path}.id") from exc


def _parse_slots(raw: Mapping[str, Any], kernel: Kernel, path: str) -> Dict[str, Any]:
    slots_path = f"{path}.slots"
    slots = _require(raw, "slots", dict, path)
    expected = set(kernel.slot_names)
    for name in sorted(slots):
        if name not in expected:
            raise LoadError(
                f"kernel {kernel.kernel_id!r} has no slot {name!r}", path=f"{slots_path}.{name}"
            )
    for name in kernel.slot_names:
        if name not in slots:
            raise LoadError(
                f"slot {name!r} of kernel {kernel.kernel_id!r} is not mapped", path=slots_path
            )

    bound: Dict[str, Any] = {}
    for slot in kernel.slots:
        _require(slots, slot.name, str, slots_path)
        bound[slot.name] = slots[slot.name]
    for variadic in kernel.variadic:
        elements = _objects(slots, variadic.name, slots_path)
        field_names = sorted(f.name for f in variadic.fields)
        checked = []
        for i, element in enumerate(elements):
            element_path = f"{slots_path}.{variadic.name}[{i}]"
            if sorted(element) != field_names:
                raise LoadError(f"element must map exactly {', '.join(field_names)}", path=element_path)
            for field_name in field_names:
                _require(element, field_name, str, element_path)
            checked.append(dict(element))
        bound[variadic.name] = tuple(checked)
    return bound


def _parse_item(raw: Mapping[str, Any], path: str, cascade: CascadeGraph) -> LineItem:
    kernel_id = _require(raw, "kernel", str, path)
    kernel = KERNELS.get(kernel_id)
    if kernel is None:
        raise LoadError(f"unknown kernel {kernel_id!r}", path=f"{path}.kernel")
    node = _require(raw, "node", str, path)
    if node not in cascade.nodes:
        raise LoadError(f"unknown cascade node {node!r}", path=f"{path}.node")
    try:
        return LineItem(
            item_id=_require(raw, "id", str, path),
            kernel=kernel_id,
            side=_enum(Side, _require(raw, "side", str, path), f"{path}.side"),
            functional_class=_functional_class(_require(raw, "class", str, path), f"{path}.class"),
            node=node,
            slots=_parse_slots(raw, kernel, path),
            label=_optional(raw, "label", str, path, ""),
        )
    except StructuralError as exc:
        raise LoadError(exc.message, path=f"{path}.id") from exc


def parse_model_manifest(data: bytes) -> ValuationModel:
    """
    Parse a model manifest. Cascade and taxonomy checks are a separate step.

    Raises:
        LoadError: naming the JSON path of the schema violation
    """
    try:
        raw = json.loads(data.decode("utf-8-sig"))
    except UnicodeDecodeError as exc:
        raise LoadError(f"not UTF-8: {exc.reason}", path="$") from exc
    except json.JSONDecodeError as exc:
        raise LoadError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}", path="$") from exc
    if not isinstance(raw, dict):
        raise LoadError("manifest must be a JSON object", path="$")

    region = _require(raw, "region", str, "$")
    year = _require(raw, "year", int, "$")
    cascade = _parse_cascade(_require(raw, "cascade", dict, "$"), "$.cascade")

    transfers = tuple(
        _parse_transfer(entry, f"$.transfers[{i}]")
        for i, entry in enumerate(_objects(raw, "transfers", "$", required=False))
    )

    items: List[LineItem] = []
    seen = set()
    for i, entry in enumerate(_objects(raw, "items", "$")):
        item = _parse_item(entry, f"$.items[{i}]", cascade)
        if item.item_id in seen:
            raise LoadError(f"duplicate item id {item.item_id!r}", path=f"$.items[{i}].id")
        seen.add(item.item_id)
        items.append(item)

    logger.info(
        "Manifest loaded",
        region=region,
        year=year,
        items=len(items),
        nodes=len(cascade.nodes),
        transfers=len(transfers),
    )
    return ValuationModel(region, year, tuple(items), cascade, transfers)


def _node_dict(node: CascadeNode) -> Dict[str, Any]:
    entry: Dict[str, Any] = {"id": node.node_id, "kind": node.kind.value, "label": node.label}
    if node.tier is not None:
        entry["tier"] = node.tier.value
    if node.functional_class is not None:
        entry["class"] = node.functional_class.value
    return entry


def _transfer_dict(record: TransferRecord) -> Dict[str, Any]:
    observations = []
    for obs in record.observations:
        unit = obs.denominator.unit
        observations.append({
            "site": obs.site,
            "numerator": obs.numerator.to(unit),
            "denominator": obs.denominator.magnitude,
            "unit": format_unit(unit),
        })
    return {
        "id": record.derived_id,
        "source": record.source,
        "year": record.year,
        "observations": observations,
        "adjustments": [{"label": a.label, "factor": a.factor} for a in record.adjustments],
    }


def _item_dict(item: LineItem) -> Dict[str, Any]:
    slots: Dict[str, Any] = {}
    for name, binding in item.slots.items():
        slots[name] = binding if isinstance(binding, str) else [dict(e) for e in binding]
    return {
        "id": item.item_id,
        "kernel": item.kernel,
        "side": item.side.value,
        "class": item.functional_class.value,
        "node": item.node,
        "label": item.label,
        "slots": slots,
    }


def serialize_model_manifest(model: ValuationModel) -> bytes:
    """Write a manifest with sorted keys, nodes and edges; items keep their order."""
    document = {
        "region": model.region,
        "year": model.year,
        "cascade": {
            "nodes": [_node_dict(model.cascade.nodes[k]) for k in sorted(model.cascade.nodes)],
            "edges": [list(edge) for edge in sorted(model.cascade.edges)],
        },
        "transfers": [_transfer_dict(r) for r in model.transfers],
        "items": [_item_dict(item) for item in model.items],
    }
    return (json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False) + "\n").encode("utf-8")


# -- Transfers and binding -----------------------------------------------------

def apply_transfers(model: ValuationModel, params: ParameterSet) -> ParameterSet:
    """
    Inject the parameters derived by the model's transfers.

    Raises:
        StructuralError: a derived id is already defined by the table
    """
    derived = [ratio_from_donors(record, default_year=model.year) for record in model.transfers]
    for parameter in derived:
        logger.info("Transfer applied", parameter=parameter.param_id, value=parameter.value)
    return params.with_parameters(derived)


@dataclass(frozen=True, order=True)
class BindingIssue:
    """One slot that could not be bound. Sorted by item id then slot."""
    item_id: str
    slot: str
    code: str
    message: str
    parameter: Optional[str] = None
    expected: Optional[str] = None
    actual: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        entry = {"item": self.item_id, "slot": self.slot, "code": self.code, "message": self.message}
        for key in ("parameter", "expected", "actual"):
            value = getattr(self, key)
            if value is not None:
                entry[key] = value
        return entry


def _check_slot(
    item: LineItem, slot: str, param_id: str, dimension: UnitDim, params: ParameterSet
) -> Optional[BindingIssue]:
    parameter = params.get(param_id)
    if parameter is None:
        return BindingIssue(
            item.item_id, slot, MISSING_PARAMETER,
            f"parameter {param_id!r} is not defined", parameter=param_id,
        )
    if not parameter.quantity.unit.compatible(dimension):
        expected, actual = format_unit(dimension), format_unit(parameter.quantity.unit)
        return BindingIssue(
            item.item_id, slot, DIMENSION_MISMATCH,
            f"parameter {param_id!r} has dimension {actual}, slot requires {expected}",
            parameter=param_id, expected=expected, actual=actual,
        )
    return None


def check_bindings(model: ValuationModel, params: ParameterSet) -> List[BindingIssue]:
    """Every binding problem in the model, sorted by item id and slot."""
    issues: List[Optional[BindingIssue]] = []
    for item in model.items:
        kernel = KERNELS.get(item.kernel)
        if kernel is None:
            issues.append(BindingIssue(item.item_id, "", UNKNOWN_KERNEL, f"unknown kernel {item.kernel!r}"))
            continue
        for slot in kernel.slots:
            binding = item.slots.get(slot.name)
            if not isinstance(binding, str):
                issues.append(BindingIssue(item.item_id, slot.name, UNBOUND_SLOT, "slot is not bound"))
                continue
            issues.append(_check_slot(item, slot.name, binding, slot.dimension, params))
        for variadic in kernel.variadic:
            elements = item.slots.get(variadic.name)
            if elements is None or isinstance(elements, str):
                issues.append(BindingIssue(item.item_id, variadic.name, UNBOUND_SLOT, "slot is not bound"))
                continue
            for i, element in enumerate(elements):
                for field in variadic.fields:
                    slot_name = f"{variadic.name}[{i}].{field.name}"
                    if field.name not in element:
                        issues.append(BindingIssue(item.item_id, slot_name, UNBOUND_SLOT, "field is not bound"))
                        continue
                    issues.append(_check_slot(item, slot_name, element[field.name], field.dimension, params))
    return sorted(issue for issue in issues if issue is not None)


@dataclass(frozen=True)
class BoundModel:
    """A model whose every slot resolves to a parameter of the right dimension."""
    model: ValuationModel
    params: ParameterSet

    def arguments(self, item: LineItem) -> Dict[str, Any]:
        """Kernel keyword arguments for an item, as quantities."""
        kernel = KERNELS[item.kernel]
        arguments: Dict[str, Any] = {}
        for slot in kernel.slots:
            arguments[slot.name] = self.params[item.slots[slot.name]].quantity
        for variadic in kernel.variadic:
            arguments[variadic.name] = [
                tuple(self.params[element[f.name]].quantity for f in variadic.fields)
                for element in item.slots[variadic.name]
            ]
        return arguments

    def parameter_for_slot(self, item: LineItem, slot: Optional[str]) -> Optional[str]:
        """Parameter id bound to a kernel slot name such as ``diseases[1].C``."""
        if slot is None:
            return None
        binding = item.slots.get(slot)
        if isinstance(binding, str):
            return binding
        match = _ELEMENT_SLOT.match(slot)
        if match is None:
            return None
        elements = item.slots.get(match["name"])
        index = int(match["index"])
        if isinstance(elements, str) or elements is None or index >= len(elements):
            return None
        return elements[index].get(match["field"])

    def used_parameters(self) -> List[str]:
        """Parameter ids referenced by any item, sorted."""
        return sorted({pid for item in self.model.items for pid in item.parameter_ids()})

    def with_values(self, values: Mapping[str, float]) -> "BoundModel":
        return BoundModel(self.model, self.params.with_values(values))


def bind(model: ValuationModel, params: ParameterSet) -> BoundModel:
    """
    Resolve every slot of every item.

    Raises:
        BindingError: carrying the full sorted issue list
    """
    issues = check_bindings(model, params)
    if issues:
        logger.warning("Binding failed", issues=len(issues))
        raise BindingError(issues)
    logger.info("Model bound", items=len(model.items), parameters=len(params))
    return BoundModel(model, params)


def load_inputs(
    manifest: bytes, params_csv: bytes
) -> Tuple[ValuationModel, ParameterSet]:
    """Parse both artifacts and apply the manifest's transfers."""
    model = parse_model_manifest(manifest)
    params = parse_params_csv(params_csv)
    params = apply_transfers(model, params).with_metadata(model.region, model.year)
    return model, params

