"""Ground-truth filters: exact Kalman recursions and a reference particle filter.

The Ornstein-Uhlenbeck model is linear-Gaussian between observation times and
the GBM model becomes one under ``Z = log X``, so both have exact filters.
Models without a closed form fall back to a fine-level particle filter averaged
over independent seeds, reported with its Monte Carlo standard error.
"""

import functools
import logging
import math
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from .config import DEFAULTS, ExperimentConfig
from .errors import ContractError, IngestionError
from .models import KalmanOutput, Observation, ReferenceValues, observation_values
from .particle_filter import pf_run
from .rng import StreamFactory
from .sde.base import DiffusionModel, FloatArray
from .sde.gbm import GeometricBrownianMotion
from .sde.ou import OrnsteinUhlenbeck
from .tables import read_table, write_table
from .workers import map_ordered

logger = logging.getLogger(__name__)

REFERENCE_STREAM = "reference"
REFERENCE_COLUMNS = ("step", "value", "stderr")


def _kalman_update(
    mean: float, variance: float, y: float, noise: float
) -> tuple[float, float]:
    """Condition a scalar Gaussian on ``y ~ N(state, noise)``."""
    total = variance + noise
    gain = variance / total if total > 0.0 else 0.0
    return mean + gain * (y - mean), (1.0 - gain) * variance


def ou_transition(model: OrnsteinUhlenbeck) -> tuple[float, float]:
    """Return the exact interval coefficient ``e^(-theta delta)`` and variance."""
    c = model.constants
    coefficient = math.exp(-c.theta * c.delta)
    if c.theta == 0.0:
        return coefficient, c.sigma**2 * c.delta
    variance = c.sigma**2 * -math.expm1(-2.0 * c.theta * c.delta) / (2.0 * c.theta)
    return coefficient, variance


def kalman_ou(
    model: DiffusionModel[Any], observations: Sequence[Observation]
) -> KalmanOutput:
    """Run the exact Kalman filter of an Ornstein-Uhlenbeck model.

    Raises:
        ContractError: ``model`` is not an Ornstein-Uhlenbeck model.
    """
    if not isinstance(model, OrnsteinUhlenbeck):
        raise ContractError(f"kalman_ou needs an OU model, got {model.name}")
    c = model.constants
    values = observation_values(observations)
    coefficient, transition_variance = ou_transition(model)

    mean, variance = c.x0, 0.0
    rows = []
    for y in values:
        prior_mean = c.mu + coefficient * (mean - c.mu)
        prior_variance = coefficient**2 * variance + transition_variance
        mean, variance = _kalman_update(prior_mean, prior_variance, float(y), c.tau2)
        rows.append((prior_mean, prior_variance, mean, variance))
    table = np.array(rows)
    return KalmanOutput(
        predictor_means=table[:, 0],
        predictor_variances=table[:, 1],
        means=table[:, 2],
        variances=table[:, 3],
        predictor_estimates=table[:, 0].copy(),
        estimates=table[:, 2].copy(),
    )


def kalman_gbm(
    model: DiffusionModel[Any], observations: Sequence[Observation]
) -> KalmanOutput:
    """Run the exact filter of a GBM model on ``Z = log X``.

    ``means``/``variances`` are the Gaussian moments of ``Z``; ``estimates``
    hold ``E[X | y_1:k] = exp(mean + variance / 2)``.

    Raises:
        ContractError: ``model`` is not a GBM model.
    """
    if not isinstance(model, GeometricBrownianMotion):
        raise ContractError(f"kalman_gbm needs a GBM model, got {model.name}")
    c = model.constants
    values = observation_values(observations)
    drift = (c.mu - 0.5 * c.sigma**2) * c.delta
    spread = c.sigma**2 * c.delta

    mean, variance = math.log(c.x0), 0.0
    rows = []
    for y in values:
        prior_mean, prior_variance = mean + drift, variance + spread
        mean, variance = _kalman_update(prior_mean, prior_variance, float(y), c.tau2)
        rows.append((prior_mean, prior_variance, mean, variance))
    table = np.array(rows)
    return KalmanOutput(
        predictor_means=table[:, 0],
        predictor_variances=table[:, 1],
        means=table[:, 2],
        variances=table[:, 3],
        predictor_estimates=np.exp(table[:, 0] + 0.5 * table[:, 1]),
        estimates=np.exp(table[:, 2] + 0.5 * table[:, 3]),
    )


def has_exact_filter(model: DiffusionModel[Any]) -> bool:
    """Return whether ``model`` has a Kalman oracle."""
    return isinstance(model, OrnsteinUhlenbeck | GeometricBrownianMotion)


def kalman_reference(
    model: DiffusionModel[Any], observations: Sequence[Observation]
) -> ReferenceValues:
    """Return exact filter means with zero error bars.

    Raises:
        ContractError: ``model`` has no Kalman oracle.
    """
    if isinstance(model, GeometricBrownianMotion):
        output = kalman_gbm(model, observations)
    elif isinstance(model, OrnsteinUhlenbeck):
        output = kalman_ou(model, observations)
    else:
        raise ContractError(f"no exact filter exists for {model.name}")
    return ReferenceValues(
        values=output.estimates,
        stderr=np.zeros_like(output.estimates),
        source="kalman",
    )


def _reference_seed(
    replicate: int,
    *,
    model: DiffusionModel[Any],
    observations: tuple[Observation, ...],
    level: int,
    particles: int,
    streams: StreamFactory,
    ess_fraction: float,
) -> FloatArray:
    """Run one reference filter replicate and return its filter means."""
    rng = streams.generator(REFERENCE_STREAM, replicate)
    output = pf_run(model, observations, level, particles, rng, ess_fraction)
    return output.filter_estimates


def reference_pf(
    model: DiffusionModel[Any],
    observations: Sequence[Observation],
    level: int = DEFAULTS.reference_level,
    particles: int = DEFAULTS.reference_particles,
    seed: int = 0,
    *,
    seeds: int = DEFAULTS.reference_seeds,
    ess_fraction: float = DEFAULTS.ess_fraction,
    workers: int | None = None,
) -> ReferenceValues:
    """Average ``seeds`` independent fine-level filters into reference values.

    The reported error is ``std(ddof=1) / sqrt(seeds)`` per step.

    Raises:
        ContractError: Fewer than two seeds.
    """
    if seeds < 2:
        raise ContractError("a reference filter needs at least 2 seeds")
    frozen = tuple(observations)
    run_seed = functools.partial(
        _reference_seed,
        model=model,
        observations=frozen,
        level=level,
        particles=particles,
        streams=StreamFactory(seed),
        ess_fraction=ess_fraction,
    )
    logger.info(
        "reference filter: level %d, %d particles, %d seeds", level, particles, seeds
    )
    runs = np.vstack(map_ordered(run_seed, range(seeds), workers))
    return ReferenceValues(
        values=runs.mean(axis=0),
        stderr=runs.std(axis=0, ddof=1) / math.sqrt(seeds),
        source="reference",
    )


def write_reference_csv(
    path: str | Path,
    reference: ReferenceValues,
    config: ExperimentConfig | None = None,
) -> Path:
    """Write ``step,value,stderr`` rows, with the config line when given."""
    frame = pd.DataFrame(
        {
            "step": np.arange(1, reference.steps + 1),
            "value": reference.values,
            "stderr": reference.stderr,
        }
    )
    return write_table(path, frame, config)


def read_reference_csv(path: str | Path) -> ReferenceValues:
    """Read reference values written by :func:`write_reference_csv`.

    Raises:
        FileNotFoundError: ``path`` does not exist.
        IngestionError: Columns are missing or steps are not ``1..n``.
    """
    frame = read_table(path)
    missing = [name for name in REFERENCE_COLUMNS if name not in frame.columns]
    if missing:
        raise IngestionError(f"{path}: missing reference columns {', '.join(missing)}")
    steps = frame["step"].to_numpy()
    if not np.array_equal(steps, np.arange(1, len(frame) + 1)):
        raise IngestionError(f"{path}: reference steps must run 1..n")
    return ReferenceValues(
        values=frame["value"].to_numpy(dtype=np.float64),
        stderr=frame["stderr"].to_numpy(dtype=np.float64),
        source="file",
    )
