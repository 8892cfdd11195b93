"""
esdv Analysis Module

Sensitivity of ledger outputs to parameter uncertainty.
"""

from analysis.sensitivity import (
    Distribution,
    SensitivityConfig,
    SensitivityReport,
    SummaryStatistics,
    elasticities,
    monte_carlo,
    oat_elasticity,
    propagate,
    run_sensitivity,
)

__all__ = [
    "Distribution",
    "SensitivityConfig",
    "SensitivityReport",
    "SummaryStatistics",
    "elasticities",
    "monte_carlo",
    "oat_elasticity",
    "propagate",
    "run_sensitivity",
]
