"""
esdv Unit Algebra

A pint registry holding the units used by the valuation formulas, each
base dimension (currency, volume, mass, area, length, energy, count,
time, sound) kept separate so that ha*mm never silently becomes m3. In
front of it sits a strict parser for unit expressions such as
``billion m3/year`` or ``RMB/ha/year`` that reports the offending token
and byte offset, and dimensioned quantities whose arithmetic tracks
exponents and folds scale factors back to 1.

Scale factors are exact rationals so that ``44 %`` folds to exactly the
double nearest 0.44 and ``1.82 billion RMB`` to 1.82e9.
"""

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, NamedTuple, Tuple, Union

import pint
from pint.util import UnitsContainer

from core.errors import (
    DimensionError,
    DomainError,
    QuantityArithmeticError,
    UnitParseError,
)
from core.validation import require_finite

BASE_DIMENSIONS: Tuple[str, ...] = (
    "currency",  # RMB
    "volume",    # m3
    "mass",      # t
    "area",      # ha
    "length",    # mm
    "energy",    # kJ
    "count",     # person / visitor
    "time",      # year
    "sound",     # dB
)

# Token written for each base dimension by format_unit
CANONICAL_TOKENS: Tuple[str, ...] = ("RMB", "m3", "t", "ha", "mm", "kJ", "person", "year", "dB")

# Empty registry: no SI prefixes or default units to collide with
UNITS = pint.UnitRegistry(None)
for _definition in (
    "yuan = [currency]",
    "cubic_meter = [volume]",
    "tonne = [mass]",
    "kilogram = 0.001 * tonne",
    "hectare = [area]",
    "millimeter = [length]",
    "kilojoule = [energy]",
    "kilowatt_hour = 3600 * kilojoule",
    "person = [count]",
    "visitor = person",
    "year = [time]",
    "decibel = [sound]",
    "percent = 0.01",
):
    UNITS.define(_definition)

# Expression token -> registry name
REGISTRY_NAMES: Dict[str, str] = {
    "RMB": "yuan",
    "m3": "cubic_meter",
    "t": "tonne",
    "kg": "kilogram",
    "ha": "hectare",
    "mm": "millimeter",
    "kJ": "kilojoule",
    "kWh": "kilowatt_hour",
    "person": "person",
    "visitor": "visitor",
    "year": "year",
    "dB": "decibel",
    "%": "percent",
}

# Base dimension -> registry unit carrying it at scale 1
_BASE_REGISTRY_UNITS: Dict[str, str] = {
    f"[{dimension}]": REGISTRY_NAMES[token] for dimension, token in zip(BASE_DIMENSIONS, CANONICAL_TOKENS)
}

ScaleLike = Union[int, float, Fraction]


def _exact_scale(factor: float) -> Fraction:
    return Fraction(factor).limit_denominator(10 ** 12)


@dataclass(frozen=True)
class UnitDim:
    """Dimensionality over BASE_DIMENSIONS plus a positive scale factor."""
    dimensionality: UnitsContainer = UnitsContainer()
    scale: Fraction = Fraction(1)

    def __post_init__(self):
        raw = dict(self.dimensionality)
        unknown = set(raw) - set(_BASE_REGISTRY_UNITS)
        if unknown:
            raise DimensionError(f"unknown base dimension(s): {sorted(unknown)}")
        scale = Fraction(self.scale)
        if scale <= 0:
            raise DimensionError(f"unit scale must be > 0, got {scale}")
        object.__setattr__(
            self, "dimensionality", UnitsContainer({k: int(v) for k, v in raw.items() if v})
        )
        object.__setattr__(self, "scale", scale)

    @classmethod
    def of(cls, scale: ScaleLike = 1, **exponents: int) -> "UnitDim":
        """Build a unit from named exponents, e.g. UnitDim.of(currency=1, time=-1)."""
        unknown = set(exponents) - set(BASE_DIMENSIONS)
        if unknown:
            raise DimensionError(f"unknown base dimension(s): {sorted(unknown)}")
        return cls(UnitsContainer({f"[{k}]": v for k, v in exponents.items() if v}), Fraction(scale))

    @classmethod
    def from_registry(cls, name: str) -> "UnitDim":
        """Dimension and scale of a registry unit, e.g. "kilowatt_hour"."""
        base = UNITS.Quantity(1, name).to_base_units()
        return cls(base.dimensionality, _exact_scale(base.magnitude))

    @property
    def exponents(self) -> Tuple[int, ...]:
        return tuple(int(self.dimensionality.get(f"[{name}]", 0)) for name in BASE_DIMENSIONS)

    @property
    def is_dimensionless(self) -> bool:
        return not self.dimensionality

    def compatible(self, other: "UnitDim") -> bool:
        """Two units are compatible iff their dimensionalities are equal."""
        return self.dimensionality == other.dimensionality

    def normalized(self) -> "UnitDim":
        if self.scale == 1:
            return self
        return UnitDim(self.dimensionality)

    def to_registry_unit(self) -> pint.Unit:
        """The registry unit of this dimensionality at scale 1."""
        return UNITS.Unit(
            UnitsContainer({_BASE_REGISTRY_UNITS[k]: v for k, v in self.dimensionality.items()})
        )

    def __mul__(self, other: "UnitDim") -> "UnitDim":
        if not isinstance(other, UnitDim):
            return NotImplemented
        return UnitDim(self.dimensionality * other.dimensionality, self.scale * other.scale)

    def __truediv__(self, other: "UnitDim") -> "UnitDim":
        if not isinstance(other, UnitDim):
            return NotImplemented
        return UnitDim(self.dimensionality / other.dimensionality, self.scale / other.scale)

    def __pow__(self, power: int) -> "UnitDim":
        return UnitDim(self.dimensionality ** power, self.scale ** power)

    def __str__(self) -> str:
        return format_unit(self)


DIMENSIONLESS = UnitDim()

BASE_UNITS: Dict[str, UnitDim] = {
    token: UnitDim.from_registry(name) for token, name in REGISTRY_NAMES.items()
}
BASE_UNITS["one"] = DIMENSIONLESS

PREFIXES: Dict[str, Fraction] = {
    "k": Fraction(1000),
    "million": Fraction(10 ** 6),
    "billion": Fraction(10 ** 9),
}

_PREFIX_FOR_SCALE = {scale: name for name, scale in PREFIXES.items()}

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<op>[*/])|(?P<pow>\^-?\d+)|(?P<word>%|[A-Za-z][A-Za-z0-9]*)|(?P<bad>\S))"
)


class _Token(NamedTuple):
    kind: str
    text: str
    offset: int  # byte offset into the UTF-8 expression


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


def _tokenize(text: str) -> Iterator[_Token]:
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            return
        match = _TOKEN_RE.match(text, pos)
        kind = match.lastgroup
        start = match.start(kind)
        token = _Token(kind, match.group(kind), _byte_offset(text, start))
        if kind == "bad":
            raise UnitParseError("unexpected character", token.text, token.offset)
        yield token
        pos = match.end()


def _resolve_base(token: _Token, allow_prefix: bool) -> UnitDim:
    unit = BASE_UNITS.get(token.text)
    if unit is not None:
        return unit
    if allow_prefix and token.text.startswith("k") and token.text[1:] in BASE_UNITS:
        return BASE_UNITS[token.text[1:]] * UnitDim(scale=PREFIXES["k"])
    raise UnitParseError("unknown unit", token.text, token.offset)


def parse_unit(text: str) -> UnitDim:
    """
    Parse a unit expression into a dimension vector with scale folded in.

    Grammar: ``prefix? base ( ('*'|'/') base )*`` where each base may carry
    an integer exponent ``^n``. Prefixes are ``k``, ``million`` and
    ``billion``; ``k`` may also be attached to the first base (``kRMB``).

    Raises:
        UnitParseError: naming the offending token and its byte offset
    """
    tokens: List[_Token] = list(_tokenize(text))
    end = _byte_offset(text, len(text))
    if not tokens:
        raise UnitParseError("empty unit expression", "", 0)

    i = 0
    result = DIMENSIONLESS
    if (
        tokens[0].kind == "word"
        and tokens[0].text in PREFIXES
        and len(tokens) > 1
        and tokens[1].kind == "word"
    ):
        result = UnitDim(scale=PREFIXES[tokens[0].text])
        i = 1

    op = "*"
    first = True
    while True:
        if i >= len(tokens):
            raise UnitParseError("expected unit after operator", "", end)
        token = tokens[i]
        if token.kind != "word":
            raise UnitParseError("expected unit", token.text, token.offset)
        factor = _resolve_base(token, allow_prefix=first and i == 0)
        i += 1
        if i < len(tokens) and tokens[i].kind == "pow":
            factor = factor ** int(tokens[i].text[1:])
            i += 1
        result = result * factor if op == "*" else result / factor
        first = False

        if i >= len(tokens):
            return result
        token = tokens[i]
        if token.kind != "op":
            raise UnitParseError("expected '*' or '/'", token.text, token.offset)
        op = token.text
        i += 1


def format_unit(unit: UnitDim) -> str:
    """
    Canonical serialization: ``*`` and ``/`` with no whitespace, one
    canonical token per base dimension, e.g. ``RMB/ha/year``.

    Raises:
        DimensionError: if the scale has no prefix spelling
    """
    numerator: List[str] = []
    denominator: List[str] = []
    for token, exponent in zip(CANONICAL_TOKENS, unit.exponents):
        if exponent > 0:
            numerator.append(token if exponent == 1 else f"{token}^{exponent}")
        elif exponent < 0:
            denominator.append(token if exponent == -1 else f"{token}^{-exponent}")

    if unit.scale == Fraction(1, 100) and unit.is_dimensionless:
        return "%"

    body = "*".join(numerator) if numerator else "one"
    if denominator:
        body += "/" + "/".join(denominator)

    if unit.scale == 1:
        return body
    prefix = _PREFIX_FOR_SCALE.get(unit.scale)
    if prefix is None:
        raise DimensionError(f"unit scale {unit.scale} has no canonical spelling")
    return f"{prefix} {body}"


def _fold(magnitude: float, scale: Fraction) -> float:
    if scale == 1:
        return magnitude
    return float(Fraction(magnitude) * scale)


@dataclass(frozen=True)
class Quantity:
    """A finite magnitude with a unit."""
    magnitude: float
    unit: UnitDim = DIMENSIONLESS

    def __post_init__(self):
        try:
            magnitude = float(self.magnitude)
        except (TypeError, ValueError, OverflowError) as exc:
            raise DomainError(f"magnitude is not a number: {self.magnitude!r}") from exc
        require_finite(magnitude, "magnitude")
        object.__setattr__(self, "magnitude", magnitude)

    @classmethod
    def parse(cls, magnitude: float, unit: str) -> "Quantity":
        """Build a quantity from a magnitude and a unit expression, normalized."""
        return cls(magnitude, parse_unit(unit)).normalized()

    def normalized(self) -> "Quantity":
        """Fold the unit scale into the magnitude."""
        if self.unit.scale == 1:
            return self
        return Quantity(_fold(self.magnitude, self.unit.scale), self.unit.normalized())

    @property
    def value(self) -> float:
        """Magnitude at scale 1."""
        return _fold(self.magnitude, self.unit.scale)

    def to(self, unit: Union[UnitDim, str]) -> float:
        """Magnitude expressed in a compatible target unit."""
        target = parse_unit(unit) if isinstance(unit, str) else unit
        if not self.unit.compatible(target):
            raise DimensionError(
                "cannot convert between incompatible units",
                expected=format_unit(target.normalized()),
                actual=format_unit(self.unit.normalized()),
            )
        if target.scale == 1:
            return self.value
        return float(Fraction(self.value) / target.scale)

    def with_magnitude(self, magnitude: float) -> "Quantity":
        return Quantity(magnitude, self.unit)

    def to_registry(self) -> pint.Quantity:
        """The same amount as a pint quantity in registry base units."""
        return UNITS.Quantity(self.value, self.unit.to_registry_unit())

    @classmethod
    def from_registry(cls, quantity: pint.Quantity) -> "Quantity":
        """Convert a pint quantity of the esdv registry, at scale 1."""
        base = quantity.to_base_units()
        return cls(float(base.magnitude), UnitDim(base.dimensionality))

    def __mul__(self, other: "Quantity") -> "Quantity":
        return qty_mul(self, other)

    def __truediv__(self, other: "Quantity") -> "Quantity":
        return qty_div(self, other)

    def __add__(self, other: "Quantity") -> "Quantity":
        return qty_add(self, other)

    def __str__(self) -> str:
        return f"{self.magnitude!r} {format_unit(self.unit)}"


def qty_mul(a: Quantity, b: Quantity) -> Quantity:
    """Multiply magnitudes, add exponents; result at scale 1."""
    a, b = a.normalized(), b.normalized()
    return Quantity(a.magnitude * b.magnitude, a.unit * b.unit)


def qty_div(a: Quantity, b: Quantity) -> Quantity:
    """Divide magnitudes, subtract exponents; result at scale 1."""
    a, b = a.normalized(), b.normalized()
    if b.magnitude == 0.0:
        raise QuantityArithmeticError(f"division by zero quantity ({b})")
    return Quantity(a.magnitude / b.magnitude, a.unit / b.unit)


def qty_add(a: Quantity, b: Quantity) -> Quantity:
    """Add two quantities of the same dimension; result at scale 1."""
    if not a.unit.compatible(b.unit):
        raise DimensionError(
            "cannot add quantities of different dimensions",
            expected=format_unit(a.unit.normalized()),
            actual=format_unit(b.unit.normalized()),
        )
    a, b = a.normalized(), b.normalized()
    return Quantity(a.magnitude + b.magnitude, a.unit)


def require_dimension(quantity: Quantity, expected: UnitDim, slot: str) -> Quantity:
    """Return the quantity normalized, or raise if its dimension differs."""
    if not isinstance(quantity, Quantity):
        raise DimensionError(
            f"{slot} must be a Quantity, got {type(quantity).__name__}", slot=slot
        )
    if not quantity.unit.compatible(expected):
        raise DimensionError(
            f"{slot} has dimension {format_unit(quantity.unit.normalized())}, "
            f"expected {format_unit(expected.normalized())}",
            expected=format_unit(expected.normalized()),
            actual=format_unit(quantity.unit.normalized()),
            slot=slot,
        )
    return quantity.normalized()


AREA = UnitDim.of(area=1)
LENGTH = UnitDim.of(length=1)
VOLUME = UnitDim.of(volume=1)
YEAR = Quantity(1.0, UnitDim.of(time=1))
RMB_PER_YEAR = UnitDim.of(currency=1, time=-1)

# 1 ha = 1e4 m2 and 1 mm = 1e-3 m, so ha*mm = 10 m3
_HA_MM_TO_M3 = 10.0


def convert_area_depth_to_volume(area: Quantity, depth: Quantity) -> Quantity:
    """
    Volume of a water layer of the given depth over the given area.

    Raises:
        DimensionError: unless area is exactly [ha] and depth exactly [mm]
    """
    area = require_dimension(area, AREA, "area")
    depth = require_dimension(depth, LENGTH, "depth")
    return Quantity(area.magnitude * depth.magnitude * _HA_MM_TO_M3, VOLUME)
