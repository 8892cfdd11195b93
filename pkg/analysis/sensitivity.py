"""
esdv Sensitivity Analysis

One-at-a-time elasticities and seeded Monte-Carlo propagation of
parameter uncertainty intervals through the ledger.

Random draws are counter-based: the uniform variate for draw j of
parameter i comes from a generator seeded with (seed, i) at stream
position j, and the a-th resample of a rejected draw from a generator
seeded with (seed, i, j, a). Draws can therefore be evaluated on any
number of threads without changing the result.
"""

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from core.engine import evaluate_model
from core.errors import (
    ConfigurationError,
    EvaluationError,
    SamplingError,
    StructuralError,
    UndefinedElasticityError,
)
from core.ingest import BoundModel
from core.logger import get_logger
from core.models import Parameter

logger = get_logger("analysis.sensitivity")

OUTPUTS = ("es_total", "eds_total", "net")
REJECTION_FACTOR = 100
MAX_SEED = 2 ** 64


class Distribution(Enum):
    """Distribution placed on each parameter's uncertainty interval."""
    UNIFORM = "uniform"
    TRIANGULAR = "triangular"  # mode at the point value


@dataclass
class SensitivityConfig:
    """Configuration for elasticities and Monte-Carlo runs."""
    samples: int = 1000
    seed: int = 0
    distribution: Distribution = Distribution.UNIFORM
    delta: float = 1e-3
    workers: int = 1
    target: str = "net"
    strict: bool = False

    def __post_init__(self):
        if isinstance(self.distribution, str):
            try:
                self.distribution = Distribution(self.distribution)
            except ValueError:
                raise ConfigurationError(
                    f"unknown distribution {self.distribution!r}", config_key="sensitivity.dist"
                ) from None
        if self.samples < 1:
            raise StructuralError(f"sample count must be >= 1, got {self.samples}", ref="samples")
        if not 0 <= self.seed < MAX_SEED:
            raise ConfigurationError(
                f"seed must be a 64-bit unsigned integer, got {self.seed}", config_key="sensitivity.seed"
            )
        if not self.delta > 0.0:
            raise ConfigurationError(f"delta must be > 0, got {self.delta}", config_key="sensitivity.delta")
        if self.workers < 1:
            raise ConfigurationError(
                f"workers must be >= 1, got {self.workers}", config_key="sensitivity.workers"
            )

    @classmethod
    def from_config(cls, config: Mapping[str, Any]) -> "SensitivityConfig":
        """Build from the loaded YAML mapping (``sensitivity`` and ``evaluation`` sections)."""
        section = config.get("sensitivity", {}) or {}
        return cls(
            samples=int(section.get("samples", 1000)),
            seed=int(section.get("seed", 0)),
            distribution=section.get("dist", "uniform"),
            delta=float(section.get("delta", 1e-3)),
            workers=int(section.get("workers", 1)),
            target=str(section.get("target", "net")),
            strict=bool((config.get("evaluation", {}) or {}).get("strict", False)),
        )


@dataclass(frozen=True)
class SummaryStatistics:
    """Sample statistics of one ledger output."""
    mean: float
    sd: float
    p5: float
    p95: float
    samples: int

    def to_dict(self) -> Dict[str, Any]:
        return {"mean": self.mean, "sd": self.sd, "p5": self.p5, "p95": self.p95, "samples": self.samples}


@dataclass(frozen=True)
class SensitivityReport:
    """Elasticities of the target plus Monte-Carlo statistics of the ledger totals."""
    seed: int
    samples: int
    distribution: Distribution
    delta: float
    target: str
    elasticities: Dict[str, Optional[float]] = field(default_factory=dict)
    statistics: Dict[str, SummaryStatistics] = field(default_factory=dict)
    varied: Tuple[str, ...] = ()
    rejections: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "samples": self.samples,
            "distribution": self.distribution.value,
            "delta": self.delta,
            "target": self.target,
            "elasticities": dict(sorted(self.elasticities.items())),
            "statistics": {k: s.to_dict() for k, s in sorted(self.statistics.items())},
            "varied": list(self.varied),
            "rejections": self.rejections,
        }


def oat_elasticity(
    bound: BoundModel,
    param_id: str,
    delta: float = 1e-3,
    target: str = "net",
    strict: bool = False,
) -> float:
    """
    Central-difference elasticity of a ledger output to one parameter:
    (V(p(1+d)) - V(p(1-d))) / (2d V(p)).

    Raises:
        StructuralError: unknown parameter or target
        UndefinedElasticityError: zero point value or zero output
        EvaluationError: a perturbed value leaves a kernel's domain
    """
    parameter = bound.params.get(param_id)
    if parameter is None:
        raise StructuralError(f"unknown parameter {param_id!r}", ref=param_id)
    if not delta > 0.0:
        raise ConfigurationError(f"delta must be > 0, got {delta}", config_key="sensitivity.delta")
    point = parameter.value
    if point == 0.0:
        raise UndefinedElasticityError(
            f"elasticity of {param_id!r} is undefined at a zero point value", parameter=param_id
        )

    base = evaluate_model(bound, strict=strict).target_value(target)
    if base == 0.0:
        raise UndefinedElasticityError(
            f"elasticity is undefined: {target} is zero", parameter=param_id
        )
    up = evaluate_model(bound, strict=strict, values={param_id: point * (1.0 + delta)})
    down = evaluate_model(bound, strict=strict, values={param_id: point * (1.0 - delta)})
    return (up.target_value(target) - down.target_value(target)) / (2.0 * delta * base)


def _inverse_cdf(u: float, parameter: Parameter, distribution: Distribution) -> float:
    low, high = parameter.uncertainty
    if high <= low:
        return low
    if distribution is Distribution.UNIFORM:
        return low + u * (high - low)
    mode = parameter.value
    width = high - low
    if u < (mode - low) / width:
        return low + math.sqrt(u * width * (mode - low))
    return high - math.sqrt((1.0 - u) * width * (high - mode))


def _uniform_streams(seed: int, count: int, samples: int) -> np.ndarray:
    """Row i holds the variates of parameter i for draws 0..samples-1."""
    streams = np.empty((count, samples))
    for i in range(count):
        streams[i] = np.random.default_rng(np.random.SeedSequence([seed, i])).random(samples)
    return streams


def _resample(seed: int, i: int, j: int, attempt: int) -> float:
    return float(np.random.default_rng(np.random.SeedSequence([seed, i, j, attempt])).random())


def _statistics(values: np.ndarray) -> SummaryStatistics:
    n = len(values)
    ordered = np.sort(values)
    if ordered[0] == ordered[-1]:
        mean, sd = float(ordered[0]), 0.0
    else:
        mean = float(np.mean(values))
        sd = float(np.std(values, ddof=1)) if n > 1 else 0.0

    def nearest_rank(p: float) -> float:
        rank = max(math.ceil(p / 100.0 * n), 1)
        return float(ordered[rank - 1])

    return SummaryStatistics(mean=mean, sd=sd, p5=nearest_rank(5), p95=nearest_rank(95), samples=n)


class _RejectionBudget:
    """Rejections shared by every draw of one run, capped in total."""

    def __init__(self, cap: int):
        self.cap = cap
        self.used = 0
        self._lock = threading.Lock()

    @property
    def exhausted(self) -> bool:
        return self.used > self.cap

    def check(self) -> None:
        if self.exhausted:
            raise SamplingError(
                f"more than {self.cap} draws rejected", rejections=self.used, cap=self.cap
            )

    def spend(self, draw: int) -> None:
        with self._lock:
            self.used += 1
        if self.exhausted:
            raise SamplingError(
                f"more than {self.cap} draws rejected (last at draw {draw})",
                rejections=self.used,
                cap=self.cap,
            )


def propagate(
    bound: BoundModel, config: SensitivityConfig
) -> Tuple[Dict[str, SummaryStatistics], Tuple[str, ...], int]:
    """
    Propagate uncertainty intervals through the ledger.

    Parameters without a nondegenerate interval are held at their point
    value. A draw that violates a kernel precondition is resampled; all
    draws share one budget of 100 x samples rejections, and the run stops
    as soon as it is spent. Whether a run exceeds the budget does not
    depend on the number of workers.

    Returns:
        (statistics per output, ids of varied parameters, rejection count)

    Raises:
        SamplingError: more than 100 x samples rejections
    """
    varied: List[Parameter] = [
        bound.params[pid] for pid in bound.used_parameters() if bound.params[pid].has_interval
    ]
    if not varied:
        logger.warning("No parameter has a nondegenerate interval; statistics are degenerate")

    n = config.samples
    budget = _RejectionBudget(REJECTION_FACTOR * n)
    streams = _uniform_streams(config.seed, len(varied), n)

    def draw(j: int) -> Tuple[float, ...]:
        variates = [float(streams[i, j]) for i in range(len(varied))]
        attempt = 0
        while True:
            budget.check()
            values = {
                p.param_id: _inverse_cdf(u, p, config.distribution) for p, u in zip(varied, variates)
            }
            try:
                evaluation = evaluate_model(bound, strict=config.strict, values=values)
                return tuple(getattr(evaluation.ledger, name) for name in OUTPUTS)
            except EvaluationError as exc:
                attempt += 1
                logger.debug("Draw rejected", draw=j, attempt=attempt, item_id=exc.item_id)
                budget.spend(j)
                variates = [_resample(config.seed, i, j, attempt) for i in range(len(varied))]

    with ThreadPoolExecutor(max_workers=config.workers) as executor:
        outcomes = list(executor.map(draw, range(n)))

    table = np.array(outcomes, dtype=float)
    statistics = {name: _statistics(table[:, k]) for k, name in enumerate(OUTPUTS)}
    logger.info(
        "Monte-Carlo run complete",
        samples=n,
        varied=len(varied),
        rejections=budget.used,
        seed=config.seed,
    )
    return statistics, tuple(p.param_id for p in varied), budget.used


def monte_carlo(bound: BoundModel, config: SensitivityConfig) -> SensitivityReport:
    """Monte-Carlo statistics of the ledger totals, without elasticities."""
    statistics, varied, rejections = propagate(bound, config)
    return SensitivityReport(
        seed=config.seed,
        samples=config.samples,
        distribution=config.distribution,
        delta=config.delta,
        target=config.target,
        statistics=statistics,
        varied=varied,
        rejections=rejections,
    )


def elasticities(
    bound: BoundModel, config: SensitivityConfig, param_ids: Optional[Sequence[str]] = None
) -> Dict[str, Optional[float]]:
    """Elasticity per parameter; None where it is undefined or leaves a kernel's domain."""
    result: Dict[str, Optional[float]] = {}
    for param_id in param_ids if param_ids is not None else bound.used_parameters():
        try:
            result[param_id] = oat_elasticity(
                bound, param_id, delta=config.delta, target=config.target, strict=config.strict
            )
        except (UndefinedElasticityError, EvaluationError) as exc:
            logger.info("Elasticity undefined", parameter=param_id, reason=exc.message)
            result[param_id] = None
    return result


def run_sensitivity(bound: BoundModel, config: SensitivityConfig) -> SensitivityReport:
    """Elasticities for every parameter used by the model plus a Monte-Carlo run."""
    return replace(monte_carlo(bound, config), elasticities=elasticities(bound, config))
