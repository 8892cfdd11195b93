"""
esdv Valuation Kernels

Pure functions from dimensioned parameters to a monetary flow in
RMB/year, one per valuation formula family, plus a registry describing
each kernel's slots so that manifests can bind parameters by name.

Disservice values are returned as positive losses; the sign is applied
once, in the ledger.

Each kernel checks every input's dimension before looking at any value,
then checks the formula's domain, then evaluates.
"""

import inspect
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from core.errors import DomainError, StructuralError
from core.models import FunctionalClass, Side
from core.units import (
    DIMENSIONLESS,
    RMB_PER_YEAR,
    YEAR,
    Quantity,
    UnitDim,
    convert_area_depth_to_volume,
    format_unit,
    parse_unit,
    qty_add,
    require_dimension,
)
from core.validation import require_fraction, require_non_negative, require_positive

# 1 m3 of water weighs 1 t
WATER_DENSITY = Quantity.parse(1.0, "t/m3")
PER_YEAR = Quantity(1.0, parse_unit("one/year"))
ZERO_FLOW = Quantity(0.0, RMB_PER_YEAR)

# Element counts enforced in strict mode
PRODUCT_CLASSES = 4
CARBON_LAND_TYPES = 3
OXYGEN_LAND_TYPES = 4

Number = Union[Quantity, float, int]
Pair = Tuple[Quantity, Quantity]


@dataclass(frozen=True)
class Valuation:
    """Kernel output: a flow and its named sub-terms."""
    value: Quantity
    breakdown: Mapping[str, Quantity] = field(default_factory=dict)


@dataclass(frozen=True)
class LineItemResult:
    """Monetary value of one line item, with its breakdown."""
    item_id: str
    side: Side
    functional_class: FunctionalClass
    value: Quantity
    breakdown: Mapping[str, Quantity] = field(default_factory=dict)

    def __post_init__(self):
        value = require_dimension(self.value, RMB_PER_YEAR, self.item_id)
        require_non_negative(value.magnitude, self.item_id)
        if self.breakdown:
            total = math.fsum(q.magnitude for q in self.breakdown.values())
            if not math.isclose(total, value.magnitude, rel_tol=1e-12, abs_tol=0.0):
                raise DomainError(
                    f"{self.item_id}: breakdown sums to {total}, value is {value.magnitude}",
                    slot=self.item_id,
                )
        object.__setattr__(self, "value", value)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.item_id,
            "side": self.side.value,
            "class": self.functional_class.value,
            "value": self.value.magnitude,
            "breakdown": {k: q.magnitude for k, q in sorted(self.breakdown.items())},
        }


def _dim(expression: str) -> UnitDim:
    return parse_unit(expression).normalized()


def _check(value: Number, expression: str, slot: str) -> Quantity:
    """Dimension check; plain numbers are accepted for dimensionless slots."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = Quantity(value, DIMENSIONLESS)
    return require_dimension(value, _dim(expression), slot)


def _check_pairs(
    pairs: Sequence[Sequence[Number]],
    name: str,
    fields: Sequence[Tuple[str, str]],
) -> List[List[Quantity]]:
    checked = []
    for i, element in enumerate(pairs):
        if len(element) != len(fields):
            raise StructuralError(
                f"{name}[{i}] has {len(element)} fields, expected {len(fields)}",
                ref=f"{name}[{i}]",
            )
        checked.append([
            _check(value, expression, f"{name}[{i}].{field_name}")
            for value, (field_name, expression) in zip(element, fields)
        ])
    return checked


def _strict_count(items: Sequence[Any], name: str, expected: int, strict: bool) -> None:
    if strict and len(items) != expected:
        raise StructuralError(
            f"{name} must have exactly {expected} entries in strict mode, got {len(items)}",
            ref=name,
        )


def _flow(quantity: Quantity) -> Quantity:
    return require_dimension(quantity, RMB_PER_YEAR, "result")


def _sum_flows(terms: Sequence[Quantity]) -> Quantity:
    total = ZERO_FLOW
    for term in terms:
        total = qty_add(total, term)
    return _flow(total)


def _sum_products(
    rows: Sequence[Sequence[Quantity]], name: str, field_names: Sequence[str]
) -> Quantity:
    terms = []
    for i, row in enumerate(rows):
        for field_name, q in zip(field_names, row):
            require_non_negative(q.magnitude, f"{name}[{i}].{field_name}")
        product = row[0]
        for q in row[1:]:
            product = product * q
        terms.append(product)
    return _sum_flows(terms)


# -- Disservices ---------------------------------------------------------------

def prevalued_value(value: Quantity) -> Quantity:
    """Pass-through for a value taken from an external report."""
    value = _check(value, "RMB/year", "value")
    require_non_negative(value.magnitude, "value")
    return _flow(value)


def infrastructure_damage_value(M: Quantity, P_T: Number) -> Quantity:
    """Repair costs of infrastructure damage: maintenance costs times repair share."""
    M = _check(M, "RMB/year", "M")
    P_T = _check(P_T, "one", "P_T")
    require_non_negative(M.magnitude, "M")
    require_fraction(P_T.magnitude, "P_T")
    return _flow(M * P_T)


def water_deficit_value(
    A_E: Quantity, Pr_WE: Quantity, A_A: Quantity, Pr_WA: Quantity
) -> Quantity:
    """Artificial watering costs compensating water consumed by plants."""
    A_E = _check(A_E, "m3/year", "A_E")
    Pr_WE = _check(Pr_WE, "RMB/m3", "Pr_WE")
    A_A = _check(A_A, "m3/year", "A_A")
    Pr_WA = _check(Pr_WA, "RMB/m3", "Pr_WA")
    for name, q in (("A_E", A_E), ("Pr_WE", Pr_WE), ("A_A", A_A), ("Pr_WA", Pr_WA)):
        require_non_negative(q.magnitude, name)
    return _flow(qty_add(A_E * Pr_WE, A_A * Pr_WA))


def disease_value(Pop: Quantity, diseases: Sequence[Sequence[Number]]) -> Quantity:
    """
    Medical costs of plant- or wildlife-related diseases.

    Each disease is (incidence alpha, share caused by plants beta, cost per
    patient C). Incidence is annual, so the sum is a yearly flow.
    """
    Pop = _check(Pop, "person", "Pop")
    rows = _check_pairs(
        diseases, "diseases", (("alpha", "one"), ("beta", "one"), ("C", "RMB/person"))
    )
    require_non_negative(Pop.magnitude, "Pop")
    terms = []
    for i, (alpha, beta, cost) in enumerate(rows):
        require_fraction(alpha.magnitude, f"diseases[{i}].alpha")
        require_fraction(beta.magnitude, f"diseases[{i}].beta")
        require_non_negative(cost.magnitude, f"diseases[{i}].C")
        terms.append(Pop * alpha * beta * cost * PER_YEAR)
    return _sum_flows(terms)


# -- Services ------------------------------------------------------------------

def food_raw_material_value(
    products: Sequence[Sequence[Quantity]], strict: bool = False
) -> Quantity:
    """Sum of production times price over product classes."""
    rows = _check_pairs(products, "products", (("Pro", "t/year"), ("Pr", "RMB/t")))
    _strict_count(rows, "products", PRODUCT_CLASSES, strict)
    return _sum_products(rows, "products", ("Pro", "Pr"))


def climate_regulation_value(
    A_W: Quantity,
    ET_avg: Quantity,
    Va: Quantity,
    Ef: Number,
    Pr_E: Quantity,
    X: Quantity,
    carbon: Sequence[Sequence[Quantity]] = (),
    oxygen: Sequence[Sequence[Quantity]] = (),
    strict: bool = False,
) -> Valuation:
    """
    Temperature and humidity regulation by wetland evaporation plus carbon
    sequestration and oxygen release.

    Temperature: evaporated volume (ha*mm -> m3) -> mass -> latent heat ->
    electricity an air conditioner of efficiency Ef would use -> cost.
    Humidity: evaporated volume times electricity per m3 evaporated.
    """
    A_W = _check(A_W, "ha", "A_W")
    ET_avg = _check(ET_avg, "mm/year", "ET_avg")
    Va = _check(Va, "kJ/kg", "Va")
    Ef = _check(Ef, "one", "Ef")
    Pr_E = _check(Pr_E, "RMB/kWh", "Pr_E")
    X = _check(X, "kWh/m3", "X")
    carbon_rows = _check_pairs(carbon, "carbon", (("amount", "t/year"), ("cost", "RMB/t")))
    oxygen_rows = _check_pairs(oxygen, "oxygen", (("amount", "t/year"), ("cost", "RMB/t")))
    _strict_count(carbon_rows, "carbon", CARBON_LAND_TYPES, strict)
    _strict_count(oxygen_rows, "oxygen", OXYGEN_LAND_TYPES, strict)
    for name, q in (("A_W", A_W), ("ET_avg", ET_avg), ("Va", Va), ("Pr_E", Pr_E), ("X", X)):
        require_non_negative(q.magnitude, name)
    require_positive(Ef.magnitude, "Ef")

    evaporated = convert_area_depth_to_volume(A_W, ET_avg * YEAR) / YEAR
    latent_heat = evaporated * WATER_DENSITY * Va
    V_T = _flow(latent_heat / Ef * Pr_E)
    V_H = _flow(evaporated * X * Pr_E)
    V_CO2 = _sum_products(carbon_rows, "carbon", ("amount", "cost"))
    V_O2 = _sum_products(oxygen_rows, "oxygen", ("amount", "cost"))
    breakdown = {"V_T": V_T, "V_H": V_H, "V_CO2": V_CO2, "V_O2": V_O2}
    return Valuation(_sum_flows(list(breakdown.values())), breakdown)


def air_quality_value(
    R: Quantity, Pr_R: Quantity, I_anion: Quantity, Pr_I: Quantity
) -> Valuation:
    """Pollutant reduction plus anion release, at artificial replacement cost."""
    R = _check(R, "t/year", "R")
    Pr_R = _check(Pr_R, "RMB/t", "Pr_R")
    I_anion = _check(I_anion, "t/year", "I_anion")
    Pr_I = _check(Pr_I, "RMB/t", "Pr_I")
    for name, q in (("R", R), ("Pr_R", Pr_R), ("I_anion", I_anion), ("Pr_I", Pr_I)):
        require_non_negative(q.magnitude, name)
    breakdown = {"V_R": _flow(R * Pr_R), "V_Ianion": _flow(I_anion * Pr_I)}
    return Valuation(_sum_flows(list(breakdown.values())), breakdown)


def water_quality_value(W_F: Quantity, W_W: Quantity, Pr_WQ: Quantity) -> Quantity:
    """Purification by forest and wetland at artificial treatment cost."""
    W_F = _check(W_F, "t/year", "W_F")
    W_W = _check(W_W, "t/year", "W_W")
    Pr_WQ = _check(Pr_WQ, "RMB/t", "Pr_WQ")
    for name, q in (("W_F", W_F), ("W_W", W_W), ("Pr_WQ", Pr_WQ)):
        require_non_negative(q.magnitude, name)
    return _flow(qty_add(W_F, W_W) * Pr_WQ)


def noise_reduction_value(N_F: Quantity, N_R: Quantity, Pr_N: Quantity) -> Quantity:
    """
    Forest noise reduction expressed in soundproof-window equivalents
    (N_F / N_R per year) priced at the window cost.
    """
    N_F = _check(N_F, "dB/year", "N_F")
    N_R = _check(N_R, "dB/year", "N_R")
    Pr_N = _check(Pr_N, "RMB", "Pr_N")
    require_non_negative(N_F.magnitude, "N_F")
    require_positive(N_R.magnitude, "N_R")
    require_non_negative(Pr_N.magnitude, "Pr_N")
    return _flow(N_F / N_R * Pr_N * PER_YEAR)


def soil_retention_value(
    R_S: Quantity,
    N_SN: Number,
    Pr_SN: Quantity,
    rho_S: Quantity,
    P_SC: Number,
    Pr_SC: Quantity,
) -> Valuation:
    """Nutrients kept in retained soil plus avoided sediment clearing."""
    R_S = _check(R_S, "t/year", "R_S")
    N_SN = _check(N_SN, "one", "N_SN")
    Pr_SN = _check(Pr_SN, "RMB/t", "Pr_SN")
    rho_S = _check(rho_S, "t/m3", "rho_S")
    P_SC = _check(P_SC, "one", "P_SC")
    Pr_SC = _check(Pr_SC, "RMB/m3", "Pr_SC")
    require_non_negative(R_S.magnitude, "R_S")
    require_fraction(N_SN.magnitude, "N_SN")
    require_non_negative(Pr_SN.magnitude, "Pr_SN")
    require_positive(rho_S.magnitude, "rho_S")
    require_fraction(P_SC.magnitude, "P_SC")
    require_non_negative(Pr_SC.magnitude, "Pr_SC")
    breakdown = {
        "V_SN": _flow(R_S * N_SN * Pr_SN),
        "V_SC": _flow(R_S / rho_S * P_SC * Pr_SC),
    }
    return Valuation(_sum_flows(list(breakdown.values())), breakdown)


def ecotourism_value(
    recreation: Sequence[Sequence[Quantity]] = (),
    education: Sequence[Sequence[Number]] = (),
) -> Valuation:
    """Entrance-fee recreation value plus per-hectare education income."""
    rec_rows = _check_pairs(
        recreation, "recreation", (("visitors", "visitor/year"), ("price", "RMB/visitor"))
    )
    edu_rows = _check_pairs(
        education,
        "education",
        (("area", "ha"), ("coefficient", "one"), ("income", "RMB/ha/year")),
    )
    breakdown = {
        "V_Rec": _sum_products(rec_rows, "recreation", ("visitors", "price")),
        "V_Edu": _sum_products(edu_rows, "education", ("area", "coefficient", "income")),
    }
    return Valuation(_sum_flows(list(breakdown.values())), breakdown)


def environmental_quality_value(
    R: Quantity,
    Pr_R: Quantity,
    I_anion: Quantity,
    Pr_I: Quantity,
    W_F: Quantity,
    W_W: Quantity,
    Pr_WQ: Quantity,
    N_F: Quantity,
    N_R: Quantity,
    Pr_N: Quantity,
) -> Valuation:
    """Air quality, water quality and noise reduction reported as one service."""
    V_A = air_quality_value(R, Pr_R, I_anion, Pr_I).value
    V_WQ = water_quality_value(W_F, W_W, Pr_WQ)
    V_N = noise_reduction_value(N_F, N_R, Pr_N)
    breakdown = {"V_A": V_A, "V_WQ": V_WQ, "V_N": V_N}
    return Valuation(_sum_flows(list(breakdown.values())), breakdown)


# -- Registry ------------------------------------------------------------------

@dataclass(frozen=True)
class Slot:
    """A scalar kernel slot and the unit dimension it requires."""
    name: str
    unit: str

    @property
    def dimension(self) -> UnitDim:
        return _dim(self.unit)


@dataclass(frozen=True)
class VariadicSlot:
    """A list-valued slot; each element binds every field."""
    name: str
    fields: Tuple[Slot, ...]
    fixed_count: Optional[int] = None


@dataclass(frozen=True)
class Kernel:
    """A registered valuation formula."""
    kernel_id: str
    function: Callable[..., Union[Quantity, Valuation]]
    slots: Tuple[Slot, ...] = ()
    variadic: Tuple[VariadicSlot, ...] = ()

    @property
    def slot_names(self) -> List[str]:
        return [s.name for s in self.slots] + [v.name for v in self.variadic]

    def evaluate(self, arguments: Mapping[str, Any], strict: bool = False) -> Valuation:
        """Call the kernel with slot-named arguments."""
        kwargs = dict(arguments)
        if "strict" in inspect.signature(self.function).parameters:
            kwargs["strict"] = strict
        result = self.function(**kwargs)
        if isinstance(result, Valuation):
            return result
        return Valuation(result)

    def describe(self) -> Dict[str, Any]:
        return {
            "id": self.kernel_id,
            "slots": {s.name: format_unit(s.dimension) for s in self.slots},
            "variadic": {
                v.name: {f.name: format_unit(f.dimension) for f in v.fields}
                for v in self.variadic
            },
            "strict_counts": {v.name: v.fixed_count for v in self.variadic if v.fixed_count},
        }


def _pairs(name: str, *fields: Tuple[str, str], fixed_count: Optional[int] = None) -> VariadicSlot:
    return VariadicSlot(name, tuple(Slot(n, u) for n, u in fields), fixed_count)


def _slots(*pairs: Tuple[str, str]) -> Tuple[Slot, ...]:
    return tuple(Slot(n, u) for n, u in pairs)


_AIR = (("R", "t/year"), ("Pr_R", "RMB/t"), ("I_anion", "t/year"), ("Pr_I", "RMB/t"))
_WATER = (("W_F", "t/year"), ("W_W", "t/year"), ("Pr_WQ", "RMB/t"))
_NOISE = (("N_F", "dB/year"), ("N_R", "dB/year"), ("Pr_N", "RMB"))

KERNELS: Dict[str, Kernel] = {
    kernel.kernel_id: kernel
    for kernel in (
        Kernel("prevalued", prevalued_value, _slots(("value", "RMB/year"))),
        Kernel("infra_damage", infrastructure_damage_value, _slots(("M", "RMB/year"), ("P_T", "one"))),
        Kernel(
            "water_deficit",
            water_deficit_value,
            _slots(("A_E", "m3/year"), ("Pr_WE", "RMB/m3"), ("A_A", "m3/year"), ("Pr_WA", "RMB/m3")),
        ),
        Kernel(
            "disease_burden",
            disease_value,
            _slots(("Pop", "person")),
            (_pairs("diseases", ("alpha", "one"), ("beta", "one"), ("C", "RMB/person")),),
        ),
        Kernel(
            "food_raw_material",
            food_raw_material_value,
            variadic=(_pairs("products", ("Pro", "t/year"), ("Pr", "RMB/t"), fixed_count=PRODUCT_CLASSES),),
        ),
        Kernel(
            "climate_regulation",
            climate_regulation_value,
            _slots(
                ("A_W", "ha"), ("ET_avg", "mm/year"), ("Va", "kJ/kg"),
                ("Ef", "one"), ("Pr_E", "RMB/kWh"), ("X", "kWh/m3"),
            ),
            (
                _pairs("carbon", ("amount", "t/year"), ("cost", "RMB/t"), fixed_count=CARBON_LAND_TYPES),
                _pairs("oxygen", ("amount", "t/year"), ("cost", "RMB/t"), fixed_count=OXYGEN_LAND_TYPES),
            ),
        ),
        Kernel("air_quality", air_quality_value, _slots(*_AIR)),
        Kernel("water_quality", water_quality_value, _slots(*_WATER)),
        Kernel("noise_reduction", noise_reduction_value, _slots(*_NOISE)),
        Kernel(
            "soil_retention",
            soil_retention_value,
            _slots(
                ("R_S", "t/year"), ("N_SN", "one"), ("Pr_SN", "RMB/t"),
                ("rho_S", "t/m3"), ("P_SC", "one"), ("Pr_SC", "RMB/m3"),
            ),
        ),
        Kernel(
            "ecotourism",
            ecotourism_value,
            variadic=(
                _pairs("recreation", ("visitors", "visitor/year"), ("price", "RMB/visitor")),
                _pairs("education", ("area", "ha"), ("coefficient", "one"), ("income", "RMB/ha/year")),
            ),
        ),
        Kernel("environmental_quality", environmental_quality_value, _slots(*_AIR, *_WATER, *_NOISE)),
    )
}


def get_kernel(kernel_id: str) -> Kernel:
    kernel = KERNELS.get(kernel_id)
    if kernel is None:
        raise StructuralError(f"unknown kernel {kernel_id!r}", ref=kernel_id)
    return kernel
