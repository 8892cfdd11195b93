"""
esdv Reports

The report document emitted by the CLI, its canonical JSON form and a
text table. Composition shares per side and the ES/EDS/net totals are
emitted as data; no graphics are produced.

Canonical JSON: sorted keys, shortest round-trip floats, UTF-8,
newline-terminated. Identical inputs give byte-identical output.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence

from core import __version__
from core.engine import Evaluation
from core.kernels import LineItemResult
from core.ledger import LedgerSummary
from core.models import Side, ValuationModel

SIDE_TITLES = {
    Side.ES: "Ecosystem services (ES)",
    Side.EDS: "Ecosystem disservices (EDS)",
}


@dataclass
class ReportOptions:
    """Display options for table output."""
    significant_figures: int = 4
    format: str = "table"

    @classmethod
    def from_config(cls, config: Mapping[str, Any]) -> "ReportOptions":
        section = config.get("report", {}) or {}
        return cls(
            significant_figures=int(section.get("significant_figures", 4)),
            format=str(section.get("format", "table")),
        )


def inputs_digest(*artifacts: bytes) -> str:
    """SHA-256 over the length-prefixed input artifacts."""
    digest = hashlib.sha256()
    for artifact in artifacts:
        digest.update(len(artifact).to_bytes(8, "big"))
        digest.update(artifact)
    return f"sha256:{digest.hexdigest()}"


def canonical_json(document: Mapping[str, Any]) -> str:
    return json.dumps(document, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n"


@dataclass(frozen=True)
class ReportDocument:
    """Everything a valuation run produced, ready for serialization."""
    digest: str
    region: Optional[str] = None
    year: Optional[int] = None
    results: Sequence[LineItemResult] = ()
    ledger: Optional[LedgerSummary] = None
    violations: Sequence[Any] = ()
    bindings: Sequence[Any] = ()
    sensitivity: Optional[Any] = None
    version: str = __version__

    @classmethod
    def from_evaluation(
        cls,
        model: ValuationModel,
        evaluation: Evaluation,
        digest: str,
        violations: Sequence[Any] = (),
        sensitivity: Optional[Any] = None,
    ) -> "ReportDocument":
        return cls(
            digest=digest,
            region=model.region,
            year=model.year,
            results=evaluation.results,
            ledger=evaluation.ledger,
            violations=tuple(violations),
            sensitivity=sensitivity,
        )

    @property
    def valid(self) -> bool:
        return not self.violations and not self.bindings

    def to_dict(self) -> Dict[str, Any]:
        document: Dict[str, Any] = {
            "version": self.version,
            "inputs_digest": self.digest,
            "region": self.region,
            "year": self.year,
            "unit": "RMB/year",
            "validation": {
                "violations": [v.to_dict() for v in self.violations],
                "bindings": [b.to_dict() for b in self.bindings],
            },
        }
        if self.ledger is not None:
            document["items"] = [r.to_dict() for r in self.results]
            document["ledger"] = {
                "es_total": self.ledger.es_total,
                "eds_total": self.ledger.eds_total,
                "net": self.ledger.net,
                "eds_to_es_ratio": self.ledger.eds_to_es_ratio,
            }
            document["composition"] = {
                "ES": dict(sorted(self.ledger.es_share.items())),
                "EDS": dict(sorted(self.ledger.eds_share.items())),
                "by_class": {
                    side: dict(sorted(totals.items()))
                    for side, totals in sorted(self.ledger.class_totals.items())
                },
            }
        if self.sensitivity is not None:
            document["sensitivity"] = self.sensitivity.to_dict()
        return document

    def to_json(self) -> str:
        return canonical_json(self.to_dict())


def significant(value: float, figures: int = 4) -> str:
    """Round to significant figures and print with thousands separators."""
    if value == 0.0:
        return "0"
    exponent = math.floor(math.log10(abs(value)))
    decimals = figures - 1 - exponent
    rounded = round(value, decimals)
    return f"{rounded:,.{max(decimals, 0)}f}"


def percent(share: Optional[float]) -> str:
    return "n/a" if share is None else f"{share * 100:.1f}%"


def _side_rows(document: ReportDocument, side: Side, figures: int) -> List[str]:
    shares = document.ledger.es_share if side is Side.ES else document.ledger.eds_share
    items = sorted(
        (r for r in document.results if r.side is side),
        key=lambda r: (-r.value.magnitude, r.item_id),
    )
    lines = [SIDE_TITLES[side]]
    for result in items:
        lines.append(
            f"  {result.item_id:<28} {result.functional_class.value:<13}"
            f" {significant(result.value.magnitude, figures):>22} {percent(shares[result.item_id]):>7}"
        )
        for name in sorted(result.breakdown):
            lines.append(
                f"    {name:<40} {significant(result.breakdown[name].magnitude, figures):>22}"
            )
    if not items:
        lines.append("  (none)")
    return lines


def _finding_lines(document: ReportDocument) -> List[str]:
    lines = []
    for violation in document.violations:
        lines.append(f"{violation.code} [{', '.join(violation.node_ids)}] {violation.message}")
    for issue in document.bindings:
        lines.append(f"{issue.code} {issue.item_id}.{issue.slot}: {issue.message}")
    return lines


def _sensitivity_lines(report: Any, figures: int) -> List[str]:
    lines = ["", f"Sensitivity (seed {report.seed}, {report.samples} draws, {report.distribution.value})"]
    lines.append(f"  Elasticity of {report.target}")
    for param_id, value in sorted(report.elasticities.items()):
        shown = "undefined" if value is None else f"{value:+.4g}"
        lines.append(f"    {param_id:<30} {shown:>12}")
    lines.append(f"  {'':<12} {'mean':>22} {'sd':>22} {'p5':>22} {'p95':>22}")
    for name, stats in sorted(report.statistics.items()):
        lines.append(
            f"  {name:<12} {significant(stats.mean, figures):>22} {significant(stats.sd, figures):>22}"
            f" {significant(stats.p5, figures):>22} {significant(stats.p95, figures):>22}"
        )
    lines.append(f"  Rejected draws: {report.rejections}")
    return lines


def render_table(document: ReportDocument, options: Optional[ReportOptions] = None) -> str:
    """Human-readable report; numbers agree with the JSON before display rounding."""
    options = options or ReportOptions()
    figures = options.significant_figures
    title = f"esdv {document.version}"
    if document.region is not None:
        title += f"  {document.region} {document.year}"
    lines = [title, f"inputs {document.digest}", ""]

    findings = _finding_lines(document)
    if findings:
        lines.append("Validation findings")
        lines.extend(f"  {line}" for line in findings)
        lines.append("")

    if document.ledger is not None:
        ledger = document.ledger
        lines.append(f"{'':<44} {'RMB/year':>22} {'share':>7}")
        lines.extend(_side_rows(document, Side.ES, figures))
        lines.append("")
        lines.extend(_side_rows(document, Side.EDS, figures))
        lines.append("")
        lines.append(f"{'ES total':<44} {significant(ledger.es_total, figures):>22}")
        lines.append(f"{'EDS total':<44} {significant(ledger.eds_total, figures):>22}")
        lines.append(f"{'Net value':<44} {significant(ledger.net, figures):>22}")
        lines.append(f"{'EDS / ES':<44} {percent(ledger.eds_to_es_ratio):>22}")

    if document.sensitivity is not None:
        lines.extend(_sensitivity_lines(document.sensitivity, figures))

    return "\n".join(lines) + "\n"


def render(document: ReportDocument, options: Optional[ReportOptions] = None) -> str:
    options = options or ReportOptions()
    if options.format == "json":
        return document.to_json()
    return render_table(document, options)
