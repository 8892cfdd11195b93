"""
esdv Error Handling

Custom exception hierarchy for loading, binding and evaluating valuation
models. Validation findings (cascade violations, binding issues) are data
records and never travel through this hierarchy; everything here aborts
the operation that raised it.
"""

from enum import Enum
from typing import Any, Dict, List, Optional, Sequence


class ErrorCategory(Enum):
    """Categories of errors for classification and exit-code mapping."""
    PARSE = "parse"                 # Malformed unit expression
    DIMENSION = "dimension"         # Incompatible unit dimensions
    DOMAIN = "domain"               # Value outside a formula's domain
    ARITHMETIC = "arithmetic"       # Division by zero and friends
    STRUCTURAL = "structural"       # Duplicate ids, dangling references
    LOAD = "load"                   # Input file could not be loaded
    BINDING = "binding"             # Parameters do not fit kernel slots
    EVALUATION = "evaluation"       # Kernel failed on a bound line item
    SENSITIVITY = "sensitivity"     # Sensitivity analysis failure
    CONFIGURATION = "configuration" # Config/setup issues


class EsdvError(Exception):
    """
    Base exception for esdv.

    All custom exceptions inherit from this class.
    """

    def __init__(
        self,
        message: str,
        category: ErrorCategory,
        context: Optional[dict] = None,
    ):
        self.message = message
        self.category = category
        self.context = context or {}
        super().__init__(self.message)

    def to_dict(self) -> dict:
        """Convert to dictionary for logging/serialization."""
        return {
            "error_type": self.__class__.__name__,
            "message": self.message,
            "category": self.category.value,
            "context": self.context,
        }


class UnitParseError(EsdvError):
    """Unit expression could not be parsed."""

    def __init__(self, message: str, token: str, offset: int):
        self.token = token
        self.offset = offset
        super().__init__(
            f"{message}: {token!r} at byte {offset}",
            ErrorCategory.PARSE,
            context={"token": token, "offset": offset},
        )


class DimensionError(EsdvError):
    """Quantity carries a dimension other than the one required."""

    def __init__(
        self,
        message: str,
        expected: Optional[str] = None,
        actual: Optional[str] = None,
        slot: Optional[str] = None,
    ):
        self.expected = expected
        self.actual = actual
        self.slot = slot
        context: Dict[str, Any] = {}
        if expected is not None:
            context["expected"] = expected
        if actual is not None:
            context["actual"] = actual
        if slot is not None:
            context["slot"] = slot
        super().__init__(message, ErrorCategory.DIMENSION, context=context)


class DomainError(EsdvError):
    """Input lies outside the domain of a valuation formula."""

    def __init__(self, message: str, slot: Optional[str] = None, value: Any = None):
        self.slot = slot
        self.value = value
        context: Dict[str, Any] = {}
        if slot is not None:
            context["slot"] = slot
        if value is not None:
            context["value"] = value
        super().__init__(message, ErrorCategory.DOMAIN, context=context)


class SingularityError(DomainError):
    """A formula divisor is zero or negative."""


class QuantityArithmeticError(EsdvError):
    """Arithmetic on quantities is undefined (division by zero)."""

    def __init__(self, message: str):
        super().__init__(message, ErrorCategory.ARITHMETIC)


class StructuralError(EsdvError):
    """Duplicate ids, unknown references, or empty required collections."""

    def __init__(self, message: str, ref: Optional[str] = None):
        self.ref = ref
        context = {"ref": ref} if ref is not None else {}
        super().__init__(message, ErrorCategory.STRUCTURAL, context=context)


class LoadError(EsdvError):
    """An input artifact (CSV or JSON manifest) could not be loaded.

    `row` is the 1-based CSV line number (header is line 1); `path` is a
    JSON path such as `$.items[2].slots.M`.
    """

    def __init__(
        self,
        message: str,
        row: Optional[int] = None,
        path: Optional[str] = None,
        token: Optional[str] = None,
    ):
        self.row = row
        self.path = path
        self.token = token
        context: Dict[str, Any] = {}
        prefix = ""
        if row is not None:
            context["row"] = row
            prefix = f"row {row}: "
        if path is not None:
            context["path"] = path
            prefix = f"{path}: "
        if token is not None:
            context["token"] = token
        super().__init__(prefix + message, ErrorCategory.LOAD, context=context)


class BindingError(EsdvError):
    """One or more kernel slots could not be bound.

    Carries every issue found, not just the first one.
    """

    def __init__(self, issues: Sequence[Any]):
        self.issues: List[Any] = list(issues)
        super().__init__(
            f"{len(self.issues)} binding issue(s)",
            ErrorCategory.BINDING,
            context={"issues": [issue.to_dict() for issue in self.issues]},
        )


class EvaluationError(EsdvError):
    """A kernel rejected the parameters bound to a line item."""

    def __init__(
        self,
        message: str,
        item_id: str,
        parameter: Optional[str] = None,
        cause: Optional[EsdvError] = None,
    ):
        self.item_id = item_id
        self.parameter = parameter
        self.cause = cause
        context: Dict[str, Any] = {"item_id": item_id}
        if parameter is not None:
            context["parameter"] = parameter
        if cause is not None:
            context["cause"] = cause.to_dict()
        super().__init__(message, ErrorCategory.EVALUATION, context=context)


class UndefinedElasticityError(EsdvError):
    """Elasticity is undefined at a zero point value or a zero output."""

    def __init__(self, message: str, parameter: Optional[str] = None):
        self.parameter = parameter
        context = {"parameter": parameter} if parameter is not None else {}
        super().__init__(message, ErrorCategory.SENSITIVITY, context=context)


class SamplingError(EsdvError):
    """Monte-Carlo sampling could not produce enough valid draws."""

    def __init__(self, message: str, rejections: int, cap: int):
        self.rejections = rejections
        self.cap = cap
        super().__init__(
            message,
            ErrorCategory.SENSITIVITY,
            context={"rejections": rejections, "cap": cap},
        )


class ConfigurationError(EsdvError):
    """Configuration/setup issue."""

    def __init__(self, message: str, config_key: Optional[str] = None):
        self.config_key = config_key
        context = {}
        if config_key:
            context["config_key"] = config_key
        super().__init__(message, ErrorCategory.CONFIGURATION, context=context)
