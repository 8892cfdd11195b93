"""
esdv Core Module

Unit algebra, cascade taxonomy, valuation kernels, ledger, value
transfer, input loading and reports.
"""

__version__ = "0.1.0"

from core.errors import (  # noqa: E402
    BindingError,
    ConfigurationError,
    DimensionError,
    DomainError,
    ErrorCategory,
    EsdvError,
    EvaluationError,
    LoadError,
    QuantityArithmeticError,
    SamplingError,
    SingularityError,
    StructuralError,
    UndefinedElasticityError,
    UnitParseError,
)
from core.logger import configure_logging, get_logger  # noqa: E402
from core.units import Quantity, UnitDim, format_unit, parse_unit  # noqa: E402
from core.models import (  # noqa: E402
    CascadeGraph,
    CascadeNode,
    DisserviceTier,
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
from core.kernels import KERNELS, LineItemResult, Valuation  # noqa: E402
from core.ledger import LedgerSummary, build_ledger  # noqa: E402
from core.taxonomy import Violation, validate_cascade, validate_model  # noqa: E402
from core.transfer import point_transfer, ratio_from_donors  # noqa: E402
from core.ingest import (  # noqa: E402
    BoundModel,
    bind,
    check_bindings,
    parse_model_manifest,
    parse_params_csv,
)
from core.engine import Evaluation, evaluate_model  # noqa: E402

__all__ = [
    "__version__",
    # Errors
    "BindingError",
    "ConfigurationError",
    "DimensionError",
    "DomainError",
    "ErrorCategory",
    "EsdvError",
    "EvaluationError",
    "LoadError",
    "QuantityArithmeticError",
    "SamplingError",
    "SingularityError",
    "StructuralError",
    "UndefinedElasticityError",
    "UnitParseError",
    # Logger
    "configure_logging",
    "get_logger",
    # Units
    "Quantity",
    "UnitDim",
    "format_unit",
    "parse_unit",
    # Models
    "CascadeGraph",
    "CascadeNode",
    "DisserviceTier",
    "FunctionalClass",
    "LineItem",
    "NodeKind",
    "Parameter",
    "ParameterSet",
    "Provenance",
    "ProvenanceMethod",
    "Side",
    "TransferRecord",
    "ValuationModel",
    # Kernels and ledger
    "KERNELS",
    "LineItemResult",
    "Valuation",
    "LedgerSummary",
    "build_ledger",
    # Taxonomy
    "Violation",
    "validate_cascade",
    "validate_model",
    # Transfer
    "point_transfer",
    "ratio_from_donors",
    # Ingest and evaluation
    "BoundModel",
    "bind",
    "check_bindings",
    "parse_model_manifest",
    "parse_params_csv",
    "Evaluation",
    "evaluate_model",
]
