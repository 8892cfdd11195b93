"""
esdv Ledger

Aggregates valued line items into service and disservice totals, the
net value and per-side composition shares. Sums run over items in
ascending id order so the result does not depend on input order.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional

from core.errors import StructuralError
from core.kernels import LineItemResult
from core.logger import get_logger
from core.models import FunctionalClass, Side

logger = get_logger("core.ledger")


@dataclass(frozen=True)
class LedgerSummary:
    """Totals in RMB/year. Disservice values are stored as positive losses."""
    es_total: float
    eds_total: float
    net: float
    es_share: Dict[str, float] = field(default_factory=dict)
    eds_share: Dict[str, float] = field(default_factory=dict)
    eds_to_es_ratio: Optional[float] = None
    class_totals: Dict[str, Dict[str, float]] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "es_total": self.es_total,
            "eds_total": self.eds_total,
            "net": self.net,
            "es_share": dict(sorted(self.es_share.items())),
            "eds_share": dict(sorted(self.eds_share.items())),
            "eds_to_es_ratio": self.eds_to_es_ratio,
            "class_totals": {side: dict(sorted(t.items())) for side, t in sorted(self.class_totals.items())},
        }


def _shares(items: List[LineItemResult], total: float) -> Dict[str, float]:
    # An all-zero side has no meaningful composition; every share is 0
    if total == 0.0:
        return {r.item_id: 0.0 for r in items}
    return {r.item_id: r.value.magnitude / total for r in items}


def _side_total(items: List[LineItemResult]) -> float:
    total = 0.0
    for result in items:
        total += result.value.magnitude
    return total


def _class_totals(items: List[LineItemResult]) -> Dict[str, float]:
    totals = {fc.value: 0.0 for fc in FunctionalClass}
    for result in items:
        totals[result.functional_class.value] += result.value.magnitude
    return totals


def build_ledger(results: Iterable[LineItemResult]) -> LedgerSummary:
    """
    Sum line-item values per side.

    Raises:
        StructuralError: if two results share an item id
    """
    by_id: Dict[str, LineItemResult] = {}
    for result in results:
        if result.item_id in by_id:
            raise StructuralError(f"duplicate line item {result.item_id!r}", ref=result.item_id)
        by_id[result.item_id] = result

    ordered = [by_id[item_id] for item_id in sorted(by_id)]
    es_items = [r for r in ordered if r.side is Side.ES]
    eds_items = [r for r in ordered if r.side is Side.EDS]

    es_total = _side_total(es_items)
    eds_total = _side_total(eds_items)
    net = es_total - eds_total
    ratio = eds_total / es_total if es_total != 0.0 else None

    logger.debug(
        "Ledger built",
        items=len(ordered),
        es_total=es_total,
        eds_total=eds_total,
        net=net,
    )

    return LedgerSummary(
        es_total=es_total,
        eds_total=eds_total,
        net=net,
        es_share=_shares(es_items, es_total),
        eds_share=_shares(eds_items, eds_total),
        eds_to_es_ratio=ratio,
        class_totals={
            Side.ES.value: _class_totals(es_items),
            Side.EDS.value: _class_totals(eds_items),
        },
    )
