"""
esdv Evaluation Engine

Runs every line item of a bound model through its kernel and builds the
ledger. A kernel precondition failure is reported as an EvaluationError
naming the item and the parameter bound to the offending slot.
"""

from dataclasses import dataclass
from typing import Mapping, Optional, Tuple

from core.errors import (
    DimensionError,
    DomainError,
    EvaluationError,
    QuantityArithmeticError,
    StructuralError,
)
from core.ingest import BoundModel
from core.kernels import LineItemResult, get_kernel
from core.ledger import LedgerSummary, build_ledger
from core.logger import LogContext, get_logger
from core.models import LineItem

logger = get_logger("core.engine")


@dataclass(frozen=True)
class Evaluation:
    """Per-item results (in item id order) and their ledger."""
    results: Tuple[LineItemResult, ...]
    ledger: LedgerSummary

    def result(self, item_id: str) -> LineItemResult:
        for result in self.results:
            if result.item_id == item_id:
                return result
        raise StructuralError(f"unknown item {item_id!r}", ref=item_id)

    def target_value(self, target: str) -> float:
        """Value of a ledger total (net, es_total, eds_total) or of one item."""
        if target in ("net", "es_total", "eds_total"):
            return getattr(self.ledger, target)
        return self.result(target).value.magnitude


def evaluate_item(bound: BoundModel, item: LineItem, strict: bool = False) -> LineItemResult:
    """
    Evaluate one line item.

    Raises:
        EvaluationError: the kernel rejected a bound parameter
    """
    kernel = get_kernel(item.kernel)
    try:
        valuation = kernel.evaluate(bound.arguments(item), strict=strict)
        return LineItemResult(
            item_id=item.item_id,
            side=item.side,
            functional_class=item.functional_class,
            value=valuation.value,
            breakdown=valuation.breakdown,
        )
    except (DomainError, DimensionError) as exc:
        parameter = bound.parameter_for_slot(item, exc.slot)
        raise EvaluationError(
            f"item {item.item_id!r}: {exc.message}"
            + (f" (parameter {parameter!r})" if parameter else ""),
            item_id=item.item_id,
            parameter=parameter,
            cause=exc,
        ) from exc
    except (QuantityArithmeticError, StructuralError) as exc:
        raise EvaluationError(
            f"item {item.item_id!r}: {exc.message}", item_id=item.item_id, cause=exc
        ) from exc


def evaluate_model(
    bound: BoundModel,
    strict: bool = False,
    values: Optional[Mapping[str, float]] = None,
) -> Evaluation:
    """
    Evaluate every item and aggregate the ledger.

    Args:
        bound: Model with resolved bindings
        strict: Enforce fixed element counts for variadic kernels
        values: Point-value overrides by parameter id (units unchanged)
    """
    if values:
        bound = bound.with_values(values)

    results = []
    for item in sorted(bound.model.items, key=lambda i: i.item_id):
        with LogContext(item_id=item.item_id):
            result = evaluate_item(bound, item, strict=strict)
            logger.debug("Item evaluated", kernel=item.kernel, value=result.value.magnitude)
        results.append(result)

    return Evaluation(tuple(results), build_ledger(results))

