"""
esdv: urban ecosystem service and disservice valuation

Validates a valuation model against its cascade graph, evaluates the
service/disservice ledger, and runs sensitivity analysis.

Usage:
    esdv validate data/beijing2018.json data/beijing2018_params.csv
    esdv value data/beijing2018.json data/beijing2018_params.csv --format json
    esdv sensitivity data/beijing2018.json data/beijing2018_params_mc.csv --samples 1000 --seed 7
    esdv kernels

Exit codes:
    0  success
    1  validation or binding findings
    2  unreadable or malformed input
    3  a kernel rejected a parameter value
    4  sensitivity analysis failed
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import yaml

from analysis.sensitivity import SensitivityConfig, run_sensitivity
from core.engine import evaluate_model
from core.errors import (
    ConfigurationError,
    DomainError,
    EsdvError,
    EvaluationError,
    LoadError,
    SamplingError,
    StructuralError,
    UndefinedElasticityError,
)
from core.ingest import BindingIssue, bind, check_bindings, load_inputs
from core.kernels import KERNELS
from core.logger import LogContext, configure_logging, get_logger
from core.models import ParameterSet, ValuationModel
from core.report import ReportDocument, ReportOptions, canonical_json, inputs_digest, render
from core.taxonomy import Violation, validate_model

logger = get_logger("main")

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent / "config" / "esdv.yaml"

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_INPUT = 2
EXIT_EVALUATION = 3
EXIT_SENSITIVITY = 4


def load_config(config_path: Optional[str] = None) -> Dict[str, Any]:
    """
    Load configuration from YAML.

    A missing default file yields built-in defaults; an explicit path that
    cannot be read or parsed is an error.
    """
    path = Path(config_path) if config_path else DEFAULT_CONFIG_PATH
    if not path.exists():
        if config_path:
            raise ConfigurationError(f"config file not found: {config_path}", config_key="--config")
        return {}

    try:
        with open(path, encoding="utf-8") as f:
            config = yaml.safe_load(f) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}", config_key="--config") from exc
    if not isinstance(config, dict):
        raise ConfigurationError(f"config {path} must be a mapping", config_key="--config")

    logger.info("Config loaded", path=str(path))
    return config


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise LoadError(f"cannot read {path}: {exc.strerror}", path=path) from exc


def _write(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise LoadError(f"cannot write {out}: {exc.strerror}", path=out) from exc


def _fail(exc: EsdvError, code: int) -> int:
    logger.error("Command failed", **exc.to_dict())
    print(f"esdv: error: {exc.message}", file=sys.stderr)
    return code


def _prepare(
    args: argparse.Namespace,
) -> Tuple[ValuationModel, ParameterSet, str, List[Violation], List[BindingIssue]]:
    manifest = _read(args.manifest)
    params_csv = _read(args.params)
    model, params = load_inputs(manifest, params_csv)
    violations = validate_model(model)
    issues = check_bindings(model, params)
    logger.info("Model checked", violations=len(violations), binding_issues=len(issues))
    return model, params, inputs_digest(manifest, params_csv), violations, issues


def _findings_only(
    model: ValuationModel, digest: str, violations: List[Violation], issues: List[BindingIssue]
) -> ReportDocument:
    return ReportDocument(
        digest=digest,
        region=model.region,
        year=model.year,
        violations=tuple(violations),
        bindings=tuple(issues),
    )


def cmd_validate(args: argparse.Namespace, config: Dict[str, Any]) -> int:
    model, _, digest, violations, issues = _prepare(args)
    document = _findings_only(model, digest, violations, issues)
    _write(render(document, _report_options(args, config)), args.out)
    return EXIT_OK if document.valid else EXIT_INVALID


def cmd_value(args: argparse.Namespace, config: Dict[str, Any]) -> int:
    model, params, digest, violations, issues = _prepare(args)
    options = _report_options(args, config)
    if violations or issues:
        _write(render(_findings_only(model, digest, violations, issues), options), args.out)
        return EXIT_INVALID

    strict = args.strict or bool((config.get("evaluation") or {}).get("strict", False))
    evaluation = evaluate_model(bind(model, params), strict=strict)
    document = ReportDocument.from_evaluation(model, evaluation, digest)
    _write(render(document, options), args.out)
    return EXIT_OK


def _sensitivity_config(args: argparse.Namespace, config: Dict[str, Any]) -> SensitivityConfig:
    section = dict(config.get("sensitivity") or {})
    overrides = {
        "samples": args.samples,
        "seed": args.seed,
        "dist": args.dist,
        "delta": args.delta,
        "workers": args.workers,
        "target": args.target,
    }
    section.update({k: v for k, v in overrides.items() if v is not None})
    evaluation = dict(config.get("evaluation") or {})
    if args.strict:
        evaluation["strict"] = True
    return SensitivityConfig.from_config({"sensitivity": section, "evaluation": evaluation})


def cmd_sensitivity(args: argparse.Namespace, config: Dict[str, Any]) -> int:
    model, params, digest, violations, issues = _prepare(args)
    options = _report_options(args, config)
    if violations or issues:
        _write(render(_findings_only(model, digest, violations, issues), options), args.out)
        return EXIT_INVALID

    try:
        sensitivity_config = _sensitivity_config(args, config)
    except (StructuralError, ConfigurationError) as exc:
        return _fail(exc, EXIT_SENSITIVITY)

    bound = bind(model, params)
    evaluation = evaluate_model(bound, strict=sensitivity_config.strict)
    try:
        report = run_sensitivity(bound, sensitivity_config)
    except (SamplingError, UndefinedElasticityError, StructuralError, ConfigurationError) as exc:
        return _fail(exc, EXIT_SENSITIVITY)

    document = ReportDocument.from_evaluation(model, evaluation, digest, sensitivity=report)
    _write(render(document, options), args.out)
    return EXIT_OK


def cmd_kernels(args: argparse.Namespace, config: Dict[str, Any]) -> int:
    listing = {kernel_id: kernel.describe() for kernel_id, kernel in KERNELS.items()}
    _write(canonical_json(listing), args.out)
    return EXIT_OK


def _report_options(args: argparse.Namespace, config: Dict[str, Any]) -> ReportOptions:
    options = ReportOptions.from_config(config)
    if getattr(args, "format", None):
        options.format = args.format
    return options


def _add_inputs(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("manifest", help="Model manifest (JSON)")
    parser.add_argument("params", help="Parameter table (CSV)")
    parser.add_argument("--format", choices=["table", "json"], help="Output format (default: table)")
    parser.add_argument("--out", help="Write the report to this file instead of stdout")
    parser.add_argument(
        "--strict",
        action="store_true",
        help="Enforce fixed element counts for food, carbon and oxygen lists",
    )


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """Parse command-line arguments."""
    parser = argparse.ArgumentParser(
        prog="esdv",
        description="Urban ecosystem service and disservice valuation",
    )
    parser.add_argument(
        "--config",
        help=f"Configuration file (default: {DEFAULT_CONFIG_PATH.name} if present)",
    )
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        help="Override the configured log level",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    validate = commands.add_parser("validate", help="Check cascade, taxonomy and bindings")
    _add_inputs(validate)
    validate.set_defaults(handler=cmd_validate)

    value = commands.add_parser("value", help="Evaluate the ES/EDS ledger")
    _add_inputs(value)
    value.set_defaults(handler=cmd_value)

    sensitivity = commands.add_parser("sensitivity", help="Elasticities and Monte-Carlo statistics")
    _add_inputs(sensitivity)
    sensitivity.add_argument("--samples", type=int, help="Monte-Carlo draws")
    sensitivity.add_argument("--seed", type=int, help="64-bit unsigned seed")
    sensitivity.add_argument("--dist", choices=["uniform", "triangular"], help="Interval distribution")
    sensitivity.add_argument("--delta", type=float, help="Relative step for elasticities")
    sensitivity.add_argument("--workers", type=int, help="Threads evaluating draws")
    sensitivity.add_argument("--target", help="Elasticity target: net, es_total, eds_total or an item id")
    sensitivity.set_defaults(handler=cmd_sensitivity)

    kernels = commands.add_parser("kernels", help="List kernels and their slot dimensions")
    kernels.add_argument("--out", help="Write the listing to this file instead of stdout")
    kernels.set_defaults(handler=cmd_kernels)

    return parser.parse_args(argv)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns the process exit code."""
    args = parse_args(argv)

    try:
        config = load_config(args.config)
    except ConfigurationError as exc:
        return _fail(exc, EXIT_INPUT)

    log_config = config.get("logging") or {}
    configure_logging(
        level=args.log_level or log_config.get("level", "WARNING"),
        format_type=log_config.get("format", "text"),
    )

    with LogContext(command=args.command):
        try:
            return args.handler(args, config)
        except LoadError as exc:
            return _fail(exc, EXIT_INPUT)
        except EvaluationError as exc:
            return _fail(exc, EXIT_EVALUATION)
        except (StructuralError, DomainError) as exc:
            # Inconsistent inputs, e.g. a transfer redefining a tabled parameter
            return _fail(exc, EXIT_INVALID)


if __name__ == "__main__":
    sys.exit(main())
