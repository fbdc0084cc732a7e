"""Typed payloads and result models for multilevel-pf."""

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import Literal, TypeAlias

import numpy as np
from typing_extensions import TypedDict

from .allocation import LevelAllocation
from .errors import ContractError
from .sde.base import FloatArray

BoolArray: TypeAlias = np.ndarray
MethodTag: TypeAlias = Literal["PF", "MLPF"]
RateKind: TypeAlias = Literal[
    "variance", "variance_final", "coupling", "coupling_mean", "ancestry"
]
RATE_KINDS: tuple[RateKind, ...] = (
    "variance",
    "variance_final",
    "coupling",
    "coupling_mean",
    "ancestry",
)


class FilterSummaryPayload(TypedDict):
    """Plain particle filter summary returned to MCP consumers."""

    model: str
    level: int
    particles: int
    steps: int
    final_filter_estimate: float
    log_normalizing_constant: float
    resampling_events: int
    cost: int


class LevelSummaryPayload(TypedDict):
    """Per-level diagnostics inside a multilevel summary."""

    level: int
    particles: int
    final_increment: float
    final_coupling: float
    mean_coupling: float
    cost: int


class MultilevelSummaryPayload(TypedDict):
    """Multilevel particle filter summary returned to MCP consumers."""

    model: str
    max_level: int
    steps: int
    final_estimate: float
    estimates: list[float]
    levels: list[LevelSummaryPayload]
    cost: int


class ReferencePayload(TypedDict):
    """Ground-truth filter values returned to MCP consumers."""

    model: str
    source: str
    values: list[float]
    stderr: list[float]


class AllocationPayload(TypedDict):
    """Per-level particle allocation and predicted cost rate."""

    model: str
    max_level: int
    variant: str
    beta: float
    gamma: float
    particles: list[int]
    step_sizes: list[float]
    cost_per_observation: int
    predicted_cost_rate: float


@dataclass(frozen=True)
class Observation:
    """One observation ``y_k`` at 1-based time index ``k``."""

    index: int
    value: float


def observations_from_values(values: Iterable[float]) -> tuple[Observation, ...]:
    """Number raw observation values ``1, 2, ...`` in sequence order."""
    return tuple(
        Observation(index=index, value=float(value))
        for index, value in enumerate(values, start=1)
    )


def observation_values(observations: Sequence[Observation]) -> FloatArray:
    """Return observation values as an array after checking their indices.

    Raises:
        ContractError: The sequence is empty or its indices are not ``1..n``.
    """
    if not observations:
        raise ContractError("at least one observation is required")
    for expected, item in enumerate(observations, start=1):
        if item.index != expected:
            raise ContractError(
                f"observation indices must run 1..n; got {item.index} at "
                f"position {expected}"
            )
    values = np.array([item.value for item in observations], dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise ContractError("observation values must be finite")
    return values


@dataclass(frozen=True, eq=False)
class Dataset:
    """Observations together with the latent states that generated them."""

    model: str
    observations: tuple[Observation, ...]
    latent: FloatArray
    obs_interval: float

    @property
    def values(self) -> FloatArray:
        """Return the observation values ``y_1..y_n``."""
        return observation_values(self.observations)

    @property
    def times(self) -> FloatArray:
        """Return the observation times ``k * delta``."""
        return self.obs_interval * np.arange(1, len(self.observations) + 1)


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    """Normalized log returns keyed by opaque date labels."""

    dates: tuple[str, ...]
    values: FloatArray

    def observations(self) -> tuple[Observation, ...]:
        """Return the series as an observation sequence."""
        return observations_from_values(self.values)


@dataclass(frozen=True, eq=False)
class FilterOutput:
    """Per-step traces of one plain particle filter run."""

    level: int
    particles: int
    predictor_estimates: FloatArray
    filter_estimates: FloatArray
    ess: FloatArray
    resampled: BoolArray
    log_increments: FloatArray
    cost: int
    clamped: int = 0
    capped: int = 0

    @property
    def steps(self) -> int:
        """Return the number of assimilated observations."""
        return len(self.filter_estimates)

    @property
    def log_normalizing_constant(self) -> float:
        """Return the log of the product of per-step mean weights."""
        return math.fsum(self.log_increments.tolist())

    def to_payload(self, model: str) -> FilterSummaryPayload:
        """Summarize the run for tool output."""
        return {
            "model": model,
            "level": self.level,
            "particles": self.particles,
            "steps": self.steps,
            "final_filter_estimate": float(self.filter_estimates[-1]),
            "log_normalizing_constant": self.log_normalizing_constant,
            "resampling_events": int(np.count_nonzero(self.resampled)),
            "cost": self.cost,
        }


@dataclass(frozen=True, eq=False)
class CoupledFilterOutput:
    """Per-step traces of one coupled fine/coarse filter run at level ``l >= 1``.

    ``coupling[m]`` is the fraction of pairs that have drawn a common ancestor
    at every resampling event up to and including step ``m``.
    ``index_coupling[m]`` is ``alpha = sum_i min(w1_i, w2_i)`` of the weights at
    step ``m``, the probability that a resampled pair shares its ancestor
    index. ``resampled_increments[m]`` is the equally weighted fine-minus-coarse
    mean right after resampling, NaN at steps without resampling.
    """

    level: int
    particles: int
    increments: FloatArray
    fine_estimates: FloatArray
    coarse_estimates: FloatArray
    fine_ess: FloatArray
    coarse_ess: FloatArray
    resampled: BoolArray
    coupling: FloatArray
    index_coupling: FloatArray
    resampled_increments: FloatArray
    fine_log_increments: FloatArray
    coarse_log_increments: FloatArray
    cost: int
    clamped: int = 0
    capped: int = 0

    @property
    def steps(self) -> int:
        """Return the number of assimilated observations."""
        return len(self.increments)

    @property
    def fine_log_normalizing_constant(self) -> float:
        """Return the fine marginal's log normalizing-constant estimate."""
        return math.fsum(self.fine_log_increments.tolist())

    @property
    def coarse_log_normalizing_constant(self) -> float:
        """Return the coarse marginal's log normalizing-constant estimate."""
        return math.fsum(self.coarse_log_increments.tolist())

    @property
    def final_index_decoupling(self) -> float:
        """Return ``1 - alpha`` at the last observation."""
        return 1.0 - float(self.index_coupling[-1])

    @property
    def final_coupling(self) -> float:
        """Return ``p_l(n)`` at the last observation."""
        return float(self.coupling[-1])

    @property
    def mean_coupling(self) -> float:
        """Return ``p_l(m)`` averaged over all observation steps."""
        return float(np.mean(self.coupling))

    def to_payload(self) -> LevelSummaryPayload:
        """Summarize the level for tool output."""
        return {
            "level": self.level,
            "particles": self.particles,
            "final_increment": float(self.increments[-1]),
            "final_coupling": self.final_coupling,
            "mean_coupling": self.mean_coupling,
            "cost": self.cost,
        }


@dataclass(frozen=True, eq=False)
class MLPFOutput:
    """Multilevel estimates with the per-level runs they were summed from."""

    estimates: FloatArray
    base: FilterOutput
    levels: tuple[CoupledFilterOutput, ...]
    allocation: LevelAllocation

    @property
    def cost(self) -> int:
        """Return the Euler-step count summed over every level."""
        return self.base.cost + sum(item.cost for item in self.levels)

    @property
    def increments(self) -> FloatArray:
        """Return the ``(L + 1, n)`` matrix of level-0 estimates and increments."""
        rows = [self.base.filter_estimates, *(item.increments for item in self.levels)]
        return np.vstack(rows)

    def to_payload(self, model: str) -> MultilevelSummaryPayload:
        """Summarize the run for tool output."""
        base_level: LevelSummaryPayload = {
            "level": 0,
            "particles": self.base.particles,
            "final_increment": float(self.base.filter_estimates[-1]),
            "final_coupling": 1.0,
            "mean_coupling": 1.0,
            "cost": self.base.cost,
        }
        return {
            "model": model,
            "max_level": self.allocation.max_level,
            "steps": len(self.estimates),
            "final_estimate": float(self.estimates[-1]),
            "estimates": [float(value) for value in self.estimates],
            "levels": [base_level, *(item.to_payload() for item in self.levels)],
            "cost": self.cost,
        }


@dataclass(frozen=True, eq=False)
class MLMCOutput:
    """Single-interval multilevel Monte Carlo estimate of ``E[phi(X_delta)]``."""

    estimate: float
    means: FloatArray
    variances: FloatArray
    samples: tuple[int, ...]
    cost: int


@dataclass(frozen=True, eq=False)
class KalmanOutput:
    """Exact filter moments for a linear-Gaussian state space model.

    ``means``/``variances`` describe the Gaussian filter of the linear state
    (``X`` for OU, ``log X`` for GBM); ``estimates`` hold ``E[phi(X) | y_1:k]``.
    """

    predictor_means: FloatArray
    predictor_variances: FloatArray
    means: FloatArray
    variances: FloatArray
    predictor_estimates: FloatArray
    estimates: FloatArray


@dataclass(frozen=True, eq=False)
class ReferenceValues:
    """Per-step ground-truth filter means with their Monte Carlo errors."""

    values: FloatArray
    stderr: FloatArray
    source: str = "reference"

    def __post_init__(self) -> None:
        """Require matching value and error lengths."""
        if self.values.shape != self.stderr.shape:
            raise ContractError("reference values and stderr lengths differ")

    @property
    def steps(self) -> int:
        """Return the number of observation steps covered."""
        return len(self.values)

    def to_payload(self, model: str) -> ReferencePayload:
        """Serialize reference values for tool output."""
        return {
            "model": model,
            "source": self.source,
            "values": [float(value) for value in self.values],
            "stderr": [float(value) for value in self.stderr],
        }


@dataclass(frozen=True, eq=False)
class RateSeries:
    """Decay of a per-level diagnostic against the step size ``h_l``."""

    kind: RateKind
    levels: tuple[int, ...]
    step_sizes: FloatArray
    ordinate: FloatArray
    slope: float
    intercept: float
    slope_stderr: float
    repetitions: int
    failures: tuple[str, ...] = ()

    @property
    def fitted(self) -> bool:
        """Return whether enough positive levels were available for a slope."""
        return math.isfinite(self.slope)


@dataclass(frozen=True, eq=False)
class StrongRates:
    """Variance-based and coupling-based strong-rate series for one model."""

    variance: RateSeries
    variance_final: RateSeries
    coupling: RateSeries
    coupling_mean: RateSeries
    ancestry: RateSeries

    def series(self) -> tuple[RateSeries, ...]:
        """Return every series in CSV row order."""
        return (
            self.variance,
            self.variance_final,
            self.coupling,
            self.coupling_mean,
            self.ancestry,
        )


@dataclass(frozen=True, eq=False)
class CostRow:
    """One ``(L, MSE, cost)`` cell of a cost-versus-MSE study."""

    level: int
    mse: float
    cost: int
    walltime: float
    mse_trace: FloatArray


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    """Cost-versus-MSE rows for one method with the fitted log-log slope."""

    model: str
    method: MethodTag
    rows: tuple[CostRow, ...]
    slope: float
    intercept: float
    slope_stderr: float
    predicted_slope: float
    failures: tuple[str, ...] = field(default=())
