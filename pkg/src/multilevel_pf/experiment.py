"""Strong-rate and cost-versus-MSE studies with their CSV tables.

Every study cell ``(level, repetition)`` owns a stream derived from the master
seed and its coordinates, and cells are reduced in sorted order, so tables do
not depend on the worker count.
"""

import functools
import logging
import time
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
import pandas as pd

from .allocation import LevelAllocation, level_allocation, predicted_cost_rate
from .config import DEFAULTS, ExperimentConfig
from .datasets import simulate_dataset
from .errors import ConfigurationError, DegenerateWeightsError, PropagationError
from .fitting import MIN_FIT_POINTS, fit_loglog, positive_points
from .kernels import LevelIndex
from .mlpf import FILTER_STREAM, coupled_pf_run, mlpf_run
from .models import (
    RATE_KINDS,
    CostRow,
    ExperimentResult,
    MethodTag,
    Observation,
    RateKind,
    RateSeries,
    ReferenceValues,
    StrongRates,
    observation_values,
)
from .oracle import has_exact_filter, kalman_reference, read_reference_csv, reference_pf
from .particle_filter import pf_run
from .rng import StreamFactory
from .sde.base import DiffusionModel, FloatArray
from .workers import map_ordered

logger = logging.getLogger(__name__)

RATES_STREAM = "rates"
COST_STREAM = "cost"
MIN_RATE_LEVEL = 3
MIN_RATE_REPETITIONS = 10

_CellFailure = str


def cost_model(allocation: LevelAllocation, n_steps: int) -> int:
    """Return the Euler-step count ``n (N_0 + sum_l N_l (2^l + 2^(l-1)))``."""
    per_step = allocation.particles[0] + sum(
        count * LevelIndex(level).coupled_steps
        for level, count in enumerate(allocation.particles)
        if level >= 1
    )
    return n_steps * per_step


def pf_particles(level: int) -> int:
    """Return the single-level particle count ``N = 2^(2L)`` of the cost study."""
    return max(2, 4**level)


def pf_cost(level: int, particles: int, n_steps: int) -> int:
    """Return the Euler-step count ``N 2^L n`` of one plain filter run."""
    return particles * LevelIndex(level).steps * n_steps


def strong_rate_prediction(model: DiffusionModel[Any]) -> float:
    """Return the expected decay exponent ``beta / 2`` of the rate diagnostics."""
    return 1.0 if model.constant_diffusion else 0.5


@dataclass(frozen=True)
class _RateCell:
    """Diagnostics of one coupled filter run in a strong-rate study."""

    final_increment: float
    resampled_increments: FloatArray
    final_decoupling: float
    mean_decoupling: float
    final_ancestry_loss: float


def _rate_cell(
    task: tuple[int, int],
    *,
    model: DiffusionModel[Any],
    observations: tuple[Observation, ...],
    particles: int,
    ess_fraction: float,
    streams: StreamFactory,
) -> _RateCell | _CellFailure:
    """Run one coupled filter and collect its increment and coupling diagnostics."""
    level, repetition = task
    rng = streams.generator(RATES_STREAM, level, repetition)
    try:
        output = coupled_pf_run(model, observations, level, particles, rng, ess_fraction)
    except (DegenerateWeightsError, PropagationError) as exc:
        return f"repetition {repetition}: {exc.at(level=level)}"
    return _RateCell(
        final_increment=float(output.increments[-1]),
        resampled_increments=output.resampled_increments,
        final_decoupling=output.final_index_decoupling,
        mean_decoupling=float(np.mean(1.0 - output.index_coupling)),
        final_ancestry_loss=1.0 - output.final_coupling,
    )


def pooled_step_variance(traces: FloatArray) -> float:
    """Return the across-run sample variance averaged over observation steps.

    ``traces`` is a ``(runs, steps)`` matrix in which NaN marks a step a run
    did not record. Steps with fewer than two recorded values are skipped;
    NaN is returned when no step qualifies.
    """
    matrix = np.asarray(traces, dtype=np.float64)
    counts = np.count_nonzero(~np.isnan(matrix), axis=0)
    usable = counts >= 2
    if not np.any(usable):
        return float("nan")
    per_step = np.nanvar(matrix[:, usable], axis=0, ddof=1)
    return float(np.mean(per_step))


def _rate_series(
    kind: RateKind,
    levels: tuple[int, ...],
    step_sizes: FloatArray,
    ordinate: FloatArray,
    repetitions: int,
    failures: list[str],
) -> RateSeries:
    """Fit one diagnostic against ``h_l`` over its positive points.

    A diagnostic with fewer than three positive levels is not fitted: its
    slope is NaN, a note says why, and a warning is logged.
    """
    notes = list(failures)
    xs, ys, keep = positive_points(step_sizes, ordinate)
    dropped = [str(level) for level, kept in zip(levels, keep) if not kept]
    if dropped:
        notes.append(f"{kind}: dropped non-positive levels {', '.join(dropped)}")
    if len(xs) >= MIN_FIT_POINTS:
        fit = fit_loglog(xs, ys)
        slope, intercept, stderr = fit.slope, fit.intercept, fit.stderr
    else:
        message = (
            f"{kind}: only {len(xs)} of {len(levels)} levels have a positive "
            f"ordinate, slope not fitted"
        )
        logger.warning("%s", message)
        notes.append(message)
        slope = intercept = stderr = float("nan")
    return RateSeries(
        kind=kind,
        levels=levels,
        step_sizes=step_sizes,
        ordinate=ordinate,
        slope=slope,
        intercept=intercept,
        slope_stderr=stderr,
        repetitions=repetitions,
        failures=tuple(notes),
    )


def estimate_strong_rates(
    model: DiffusionModel[Any],
    max_level: int = DEFAULTS.rate_level_max,
    repetitions: int = DEFAULTS.repetitions,
    seed: int = 0,
    *,
    observations: Sequence[Observation] | None = None,
    particles: int = DEFAULTS.rate_particles,
    min_level: int = 1,
    ess_fraction: float = DEFAULTS.rate_ess_fraction,
    workers: int | None = None,
) -> StrongRates:
    """Estimate strong-rate decay from coupled filters at levels ``min_level..L_max``.

    For each level, ``repetitions`` coupled filters with ``particles`` pairs
    yield five diagnostics:

    - ``variance``: the across-run variance of the equally weighted
      fine-minus-coarse mean right after each resampling, averaged over steps.
    - ``variance_final``: the across-run variance of the final increment.
    - ``coupling``: the mean of ``1 - alpha`` at the final step, where
      ``alpha`` is the probability that a resampled pair shares its index.
    - ``coupling_mean``: the mean of ``1 - alpha`` over every step.
    - ``ancestry``: the mean final fraction of pairs outside the
      common-ancestry set.

    The filters resample at every step by default (``ess_fraction = 1``).
    Failed runs are skipped and annotated rather than aborting the study.

    Raises:
        ConfigurationError: ``max_level < 3``, ``repetitions < 10``, or
            ``min_level`` outside ``[1, max_level]``.
    """
    if max_level < MIN_RATE_LEVEL:
        raise ConfigurationError(f"rate studies need max_level >= {MIN_RATE_LEVEL}")
    if repetitions < MIN_RATE_REPETITIONS:
        raise ConfigurationError(
            f"rate studies need at least {MIN_RATE_REPETITIONS} repetitions"
        )
    if not 1 <= min_level <= max_level:
        raise ConfigurationError("min_level must lie in [1, max_level]")
    if observations is None:
        observations = simulate_dataset(
            model, DEFAULTS.synthetic_observations, seed=seed
        ).observations
    frozen = tuple(observations)
    observation_values(frozen)

    levels = tuple(range(min_level, max_level + 1))
    tasks = [(level, repetition) for level in levels for repetition in range(repetitions)]
    run_cell = functools.partial(
        _rate_cell,
        model=model,
        observations=frozen,
        particles=particles,
        ess_fraction=ess_fraction,
        streams=StreamFactory(seed),
    )
    outcomes = map_ordered(run_cell, tasks, workers)

    failures: list[str] = []
    ordinates = {kind: np.full(len(levels), np.nan) for kind in RATE_KINDS}
    for row, level in enumerate(levels):
        cells = outcomes[row * repetitions : (row + 1) * repetitions]
        good = [cell for cell in cells if not isinstance(cell, str)]
        failures.extend(cell for cell in cells if isinstance(cell, str))
        if len(good) >= 2:
            ordinates["variance"][row] = pooled_step_variance(
                np.vstack([cell.resampled_increments for cell in good])
            )
            ordinates["variance_final"][row] = np.var(
                [cell.final_increment for cell in good], ddof=1
            )
            ordinates["coupling"][row] = np.mean([cell.final_decoupling for cell in good])
            ordinates["coupling_mean"][row] = np.mean(
                [cell.mean_decoupling for cell in good]
            )
            ordinates["ancestry"][row] = np.mean(
                [cell.final_ancestry_loss for cell in good]
            )
        logger.info("rates %s level %d: %d/%d runs", model.name, level, len(good), repetitions)

    step_sizes = np.array([LevelIndex(level).step_size(model.obs_interval) for level in levels])
    fitted = {
        kind: _rate_series(kind, levels, step_sizes, ordinates[kind], repetitions, failures)
        for kind in RATE_KINDS
    }
    return StrongRates(
        variance=fitted["variance"],
        variance_final=fitted["variance_final"],
        coupling=fitted["coupling"],
        coupling_mean=fitted["coupling_mean"],
        ancestry=fitted["ancestry"],
    )


def resolve_truth(
    model: DiffusionModel[Any],
    observations: Sequence[Observation],
    config: ExperimentConfig,
) -> ReferenceValues:
    """Return truth values from a reference file, a Kalman filter, or a reference PF."""
    if config.truth is not None:
        return read_reference_csv(config.truth)
    if has_exact_filter(model):
        return kalman_reference(model, observations)
    return reference_pf(
        model,
        observations,
        config.reference_level,
        config.reference_particles,
        config.seed,
        seeds=config.reference_seeds,
        ess_fraction=config.ess_fraction,
        workers=config.workers,
    )


def _cost_cell(
    task: tuple[int, int],
    *,
    model: DiffusionModel[Any],
    method: MethodTag,
    observations: tuple[Observation, ...],
    ess_fraction: float,
    streams: StreamFactory,
) -> tuple[FloatArray, float] | _CellFailure:
    """Run one repetition of a cost-study cell and return estimates and seconds."""
    level, repetition = task
    cell_streams = streams.child(COST_STREAM, method, level, repetition)
    started = time.perf_counter()
    try:
        if method == "PF":
            rng = cell_streams.generator(FILTER_STREAM)
            output = pf_run(
                model, observations, level, pf_particles(level), rng, ess_fraction
            )
            estimates = output.filter_estimates
        else:
            allocation = level_allocation(level, model)
            estimates = mlpf_run(
                model, observations, allocation, cell_streams, ess_fraction, workers=1
            ).estimates
    except (DegenerateWeightsError, PropagationError) as exc:
        return f"L={level}, repetition {repetition}: {exc}"
    return estimates, time.perf_counter() - started


def mse_vs_cost(
    model: DiffusionModel[Any],
    method: MethodTag,
    levels: Iterable[int],
    repetitions: int,
    truth: ReferenceValues | None,
    seed: int = 0,
    *,
    observations: Sequence[Observation],
    ess_fraction: float = DEFAULTS.ess_fraction,
    workers: int | None = None,
    record_walltime: bool = False,
) -> ExperimentResult:
    """Measure final-step MSE against cost for each finest level ``L``.

    The plain filter uses ``N = 2^(2L)`` particles at level ``L``; the
    multilevel filter uses :func:`level_allocation`. Cost is the Euler-step
    count of one run. The slope is the log-log fit of cost against MSE.

    Raises:
        ConfigurationError: Missing or mismatched truth, an unknown method,
            or no levels.
    """
    if method not in ("PF", "MLPF"):
        raise ConfigurationError(f"method must be PF or MLPF, got {method!r}")
    if truth is None:
        raise ConfigurationError("truth values are required for an MSE study")
    frozen = tuple(observations)
    n_steps = len(observation_values(frozen))
    if truth.steps != n_steps:
        raise ConfigurationError(
            f"truth covers {truth.steps} steps but there are {n_steps} observations"
        )
    level_list = sorted(set(levels))
    if not level_list:
        raise ConfigurationError("an MSE study needs at least one level")
    if repetitions < 1:
        raise ConfigurationError("repetitions must be positive")

    tasks = [(level, repetition) for level in level_list for repetition in range(repetitions)]
    run_cell = functools.partial(
        _cost_cell,
        model=model,
        method=method,
        observations=frozen,
        ess_fraction=ess_fraction,
        streams=StreamFactory(seed),
    )
    outcomes = map_ordered(run_cell, tasks, workers)

    rows: list[CostRow] = []
    failures: list[str] = []
    for index, level in enumerate(level_list):
        cells = outcomes[index * repetitions : (index + 1) * repetitions]
        good = [cell for cell in cells if not isinstance(cell, str)]
        failures.extend(cell for cell in cells if isinstance(cell, str))
        if not good:
            continue
        errors = np.vstack([estimates for estimates, _ in good]) - truth.values
        trace = np.mean(errors**2, axis=0)
        if method == "PF":
            cost = pf_cost(level, pf_particles(level), n_steps)
        else:
            cost = cost_model(level_allocation(level, model), n_steps)
        walltime = (
            float(np.mean([seconds for _, seconds in good])) if record_walltime else float("nan")
        )
        rows.append(
            CostRow(level=level, mse=float(trace[-1]), cost=cost, walltime=walltime, mse_trace=trace)
        )
        logger.info("%s %s L=%d: mse=%.3e cost=%d", model.name, method, level, trace[-1], cost)

    beta = 2.0 if model.constant_diffusion else 1.0
    mse = np.array([row.mse for row in rows])
    costs = np.array([row.cost for row in rows], dtype=np.float64)
    kept_costs, kept_mse, _ = positive_points(costs, mse)
    if len(kept_costs) >= MIN_FIT_POINTS:
        fit = fit_loglog(kept_mse, kept_costs)
        slope, intercept, stderr = fit.slope, fit.intercept, fit.stderr
    else:
        failures.append(f"fewer than {MIN_FIT_POINTS} usable levels, no fit")
        slope = intercept = stderr = float("nan")
    return ExperimentResult(
        model=model.name,
        method=method,
        rows=tuple(rows),
        slope=slope,
        intercept=intercept,
        slope_stderr=stderr,
        predicted_slope=predicted_cost_rate(method, beta),
        failures=tuple(failures),
    )


def rates_frame(model_name: str, rates: StrongRates) -> pd.DataFrame:
    """Return the ``rates.csv`` table."""
    series = rates.variance
    return pd.DataFrame(
        {
            "model": model_name,
            "l": list(series.levels),
            "h": series.step_sizes,
            "var": series.ordinate,
            "var_final": rates.variance_final.ordinate,
            "one_minus_p": rates.coupling.ordinate,
            "one_minus_p_mean": rates.coupling_mean.ordinate,
            "ancestry_loss": rates.ancestry.ordinate,
            "R": series.repetitions,
        }
    )


def rate_slopes_frame(
    model: DiffusionModel[Any], rates: StrongRates
) -> pd.DataFrame:
    """Return the ``slopes.csv`` table of a strong-rate study."""
    predicted = strong_rate_prediction(model)
    return pd.DataFrame(
        [
            {
                "model": model.name,
                "method": series.kind,
                "slope": series.slope,
                "stderr": series.slope_stderr,
                "predicted": predicted,
                "fitted": series.fitted,
            }
            for series in rates.series()
        ]
    )


def cost_frame(results: Sequence[ExperimentResult]) -> pd.DataFrame:
    """Return the ``cost.csv`` table of one or more cost studies."""
    return pd.DataFrame(
        [
            {
                "model": result.model,
                "method": result.method,
                "L": row.level,
                "mse": row.mse,
                "cost": row.cost,
                "walltime": row.walltime,
            }
            for result in results
            for row in result.rows
        ],
        columns=["model", "method", "L", "mse", "cost", "walltime"],
    )


def cost_slopes_frame(results: Sequence[ExperimentResult]) -> pd.DataFrame:
    """Return the ``slopes.csv`` table of one or more cost studies."""
    return pd.DataFrame(
        [
            {
                "model": result.model,
                "method": result.method,
                "slope": result.slope,
                "stderr": result.slope_stderr,
                "predicted": result.predicted_slope,
            }
            for result in results
        ],
        columns=["model", "method", "slope", "stderr", "predicted"],
    )


def require_levels(level_min: int, level_max: int) -> range:
    """Return ``level_min..level_max`` for a cost study.

    Raises:
        ConfigurationError: ``level_min < 1``.
    """
    if level_min < 1:
        raise ConfigurationError("cost studies start at level 1 or above")
    return range(level_min, level_max + 1)
