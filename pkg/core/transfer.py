"""
esdv Value Transfer

Derives parameters from donor-site studies and applies explicit
multiplicative adjustment factors (income, purchasing power, ...) to
point values. No exchange-rate or inflation tables are built in.
"""

import math
from typing import Iterable, Sequence, Tuple, Union

from core.errors import StructuralError
from core.logger import get_logger
from core.models import (
    Adjustment,
    Parameter,
    Provenance,
    ProvenanceMethod,
    TransferRecord,
)
from core.units import DIMENSIONLESS, Quantity, qty_div
from core.validation import require_positive

logger = get_logger("core.transfer")

AdjustmentLike = Union[Adjustment, Tuple[str, float]]


def _as_adjustments(adjustments: Iterable[AdjustmentLike]) -> Tuple[Adjustment, ...]:
    return tuple(a if isinstance(a, Adjustment) else Adjustment(*a) for a in adjustments)


def adjustment_product(adjustments: Iterable[AdjustmentLike]) -> float:
    """Product of the factors in the order given; 1.0 when empty."""
    product = 1.0
    for adjustment in _as_adjustments(adjustments):
        product *= adjustment.factor
    return product


def _labelled(source: str, adjustments: Sequence[Adjustment]) -> str:
    if not adjustments:
        return source
    return f"{source} [adjusted: {', '.join(a.label for a in adjustments)}]"


def ratio_from_donors(record: TransferRecord, default_year: int = 0) -> Parameter:
    """
    Mean of per-site numerator/denominator ratios, times the adjustment
    product, with the [min, max] ratio interval scaled the same way.

    Raises:
        StructuralError: no observations
        SingularityError: a denominator is zero or negative
    """
    if not record.observations:
        raise StructuralError(
            f"transfer {record.derived_id!r} has no donor observations", ref=record.derived_id
        )

    ratios = []
    for observation in record.observations:
        denominator = observation.denominator.normalized()
        require_positive(denominator.magnitude, f"{record.derived_id}.{observation.site}")
        ratio = qty_div(observation.numerator, denominator)
        ratios.append(ratio.magnitude)

    low, high = min(ratios), max(ratios)
    # Floating rounding can push the mean a hair outside the site range
    mean = min(max(math.fsum(ratios) / len(ratios), low), high)

    adjustments = _as_adjustments(record.adjustments)
    product = adjustment_product(adjustments)

    logger.debug(
        "Donor ratio derived",
        derived_id=record.derived_id,
        sites=len(ratios),
        mean=mean,
        adjustment=product,
    )

    return Parameter(
        param_id=record.derived_id,
        quantity=Quantity(mean * product, DIMENSIONLESS),
        provenance=Provenance(
            source=_labelled(record.source, adjustments),
            year=record.year if record.year is not None else default_year,
            method=ProvenanceMethod.TRANSFER,
        ),
        uncertainty=(low * product, high * product),
    )


def point_transfer(value: Parameter, adjustments: Iterable[AdjustmentLike]) -> Parameter:
    """
    Scale a parameter by the product of adjustment factors.

    The unit is unchanged; the interval, when present, is scaled by the
    same product and the adjustment labels are recorded in the source.

    Raises:
        DomainError: a factor is not > 0
    """
    adjustments = _as_adjustments(adjustments)
    product = adjustment_product(adjustments)
    uncertainty = None
    if value.uncertainty is not None:
        uncertainty = (value.uncertainty[0] * product, value.uncertainty[1] * product)
    return Parameter(
        param_id=value.param_id,
        quantity=value.quantity.with_magnitude(value.value * product),
        provenance=Provenance(
            source=_labelled(value.provenance.source, adjustments),
            year=value.provenance.year,
            method=ProvenanceMethod.TRANSFER,
        ),
        uncertainty=uncertainty,
    )
