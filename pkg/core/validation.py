"""
esdv Input Validation

Guards shared by the unit layer, the kernels and the loaders. Numeric
guards raise DomainError/SingularityError naming the offending slot so
that the evaluator can point at the parameter bound to it.
"""

import math
import re

from core.errors import DomainError, SingularityError, StructuralError

MAX_IDENTIFIER_LENGTH = 128

# Canonical symbols such as "M", "P_T", "Pr_WE", "alpha_asthma", "EDS_water"
IDENTIFIER_PATTERN = re.compile(r"^[A-Za-z][A-Za-z0-9_\-\.]*$")


def validate_identifier(name: str, field_name: str = "id") -> str:
    """
    Validate a parameter, item or node identifier.

    Args:
        name: The identifier to validate
        field_name: Name of the field (for error messages)

    Returns:
        The validated identifier

    Raises:
        StructuralError: If validation fails
    """
    if not isinstance(name, str) or not name:
        raise StructuralError(f"{field_name} must be a non-empty string", ref=str(name))

    if len(name) > MAX_IDENTIFIER_LENGTH:
        raise StructuralError(
            f"{field_name} too long: {len(name)} characters "
            f"(max {MAX_IDENTIFIER_LENGTH})",
            ref=name[:MAX_IDENTIFIER_LENGTH],
        )

    if not IDENTIFIER_PATTERN.match(name):
        raise StructuralError(
            f"{field_name} must start with a letter and contain only "
            "alphanumeric, underscore, hyphen, or dot characters",
            ref=name,
        )

    return name


def require_finite(value: float, slot: str) -> float:
    """Reject NaN and infinities."""
    if not math.isfinite(value):
        raise DomainError(f"{slot} must be finite, got {value}", slot=slot, value=value)
    return value


def require_non_negative(value: float, slot: str) -> float:
    """Reject negative magnitudes."""
    require_finite(value, slot)
    if value < 0.0:
        raise DomainError(f"{slot} must be >= 0, got {value}", slot=slot, value=value)
    return value


def require_fraction(value: float, slot: str) -> float:
    """Require a share within [0, 1]."""
    require_finite(value, slot)
    if not 0.0 <= value <= 1.0:
        raise DomainError(
            f"{slot} must be between 0 and 1, got {value}", slot=slot, value=value
        )
    return value


def require_positive(value: float, slot: str) -> float:
    """Require a strictly positive divisor."""
    require_finite(value, slot)
    if value <= 0.0:
        raise SingularityError(
            f"{slot} must be > 0, got {value}", slot=slot, value=value
        )
    return value
