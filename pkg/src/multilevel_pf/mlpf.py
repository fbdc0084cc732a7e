"""Multilevel particle filter and the unfiltered multilevel Monte Carlo estimator.

Level 0 is a plain particle filter. Each level ``l >= 1`` runs a coupled
fine/coarse filter whose clouds share Gaussian draws and resample through the
maximal coupling, triggered by the coarse ESS. The multilevel estimate at step
``m`` is the level-0 filter estimate plus the increments of levels ``1..L``,
summed in ascending level order.

Every level owns its own stream: ``(0, "filter")`` at level 0 and
``(l, "coupled")`` above, so adding levels leaves lower levels untouched.
"""

import functools
import logging
import math
from collections.abc import Callable, Sequence
from typing import Any

import numpy as np
import numpy.typing as npt

from .allocation import EULER_COST_RATE, MIN_LEVEL_PARTICLES, LevelAllocation
from .config import DEFAULTS
from .errors import ContractError, DegenerateWeightsError, PropagationError
from .kernels import LevelIndex, as_level, simulate_coupled_transition, simulate_transition
from .models import (
    CoupledFilterOutput,
    FilterOutput,
    MLMCOutput,
    MLPFOutput,
    Observation,
    observation_values,
)
from .particle_filter import check_ess_fraction, pf_run, should_resample
from .resampling import (
    CoupledIndices,
    coupled_resample,
    coupling_probability,
    ess,
    log_evidence_increment,
    normalize_weights,
    weighted_mean,
)
from .rng import StreamFactory
from .sde.base import DiffusionModel, FloatArray
from .workers import map_ordered

logger = logging.getLogger(__name__)

FILTER_STREAM = "filter"
COUPLED_STREAM = "coupled"
MLMC_STREAM = "mlmc"


def level_stream(streams: StreamFactory, level: int) -> np.random.Generator:
    """Return the generator owned by ``level`` of a multilevel run."""
    role = FILTER_STREAM if level == 0 else COUPLED_STREAM
    return streams.generator(level, role)


def increment_estimate(
    fine_weights: npt.ArrayLike,
    coarse_weights: npt.ArrayLike,
    fine_states: npt.ArrayLike,
    coarse_states: npt.ArrayLike,
    phi: Callable[[FloatArray], FloatArray],
) -> float:
    """Return ``sum_i [w1_i phi(U1_i) - w2_i phi(U2_i)]``.

    Each weight vector is renormalized by its own computed sum. Zero coarse
    weights give the level-0 convention: the fine weighted mean alone.

    Raises:
        ContractError: The four arrays differ in length.
    """
    w1 = np.asarray(fine_weights, dtype=np.float64)
    w2 = np.asarray(coarse_weights, dtype=np.float64)
    u1 = np.asarray(fine_states, dtype=np.float64)
    u2 = np.asarray(coarse_states, dtype=np.float64)
    if not w1.shape == w2.shape == u1.shape == u2.shape:
        raise ContractError("increment weights and states must share one length")
    return weighted_mean(w1, phi(u1)) - weighted_mean(w2, phi(u2))


def update_common_ancestry(
    common: npt.NDArray[np.bool_], indices: CoupledIndices
) -> npt.NDArray[np.bool_]:
    """Return the common-ancestry flags after one coupled resampling event.

    Pair ``k`` stays common only when it took the shared-ancestor branch and
    that ancestor was itself common. One common ancestor may be copied into
    many slots, so the common fraction can rise as well as fall.
    """
    return indices.coupled & common[indices.first]


def coupled_pf_run(
    model: DiffusionModel[Any],
    observations: Sequence[Observation],
    level: "int | LevelIndex",
    particles: int,
    rng: np.random.Generator,
    ess_fraction: float = DEFAULTS.ess_fraction,
) -> CoupledFilterOutput:
    """Run the coupled fine/coarse particle filter at level ``l >= 1``.

    Both chains start at ``x0``. Weights accumulate in log space on each
    marginal between resampling events; the increment is taken from the
    accumulated normalized weights before any resampling at that step. At a
    resampling step the equally weighted difference of the resampled clouds
    is recorded as well, together with the probability that a pair shares
    its ancestor index.

    Raises:
        ContractError: ``level`` is 0, or invalid ``particles``/``ess_fraction``.
        DegenerateWeightsError: Either marginal's weights vanish; the message
            names the level and step.
        PropagationError: An Euler step leaves the finite reals.
    """
    resolved = as_level(level)
    if resolved.index == 0:
        raise ContractError("coupled filters need level >= 1")
    if particles < 2:
        raise ContractError("a coupled filter needs at least 2 particles")
    check_ess_fraction(ess_fraction)
    values = observation_values(observations)
    steps = len(values)

    fine = np.full(particles, model.initial_state, dtype=np.float64)
    coarse = fine.copy()
    fine_log_weights = np.zeros(particles)
    coarse_log_weights = np.zeros(particles)
    common = np.ones(particles, dtype=bool)
    clamped = capped = 0

    increments = np.empty(steps)
    fine_estimates = np.empty(steps)
    coarse_estimates = np.empty(steps)
    fine_ess = np.empty(steps)
    coarse_ess = np.empty(steps)
    resampled = np.zeros(steps, dtype=bool)
    coupling = np.empty(steps)
    index_coupling = np.empty(steps)
    resampled_increments = np.full(steps, np.nan)
    fine_log_increments = np.empty(steps)
    coarse_log_increments = np.empty(steps)

    for position, y in enumerate(values):
        step = position + 1
        fine, coarse = simulate_coupled_transition(model, fine, coarse, resolved, rng)
        clamped += model.count_clamped(fine) + model.count_clamped(coarse)
        capped += model.count_capped(fine) + model.count_capped(coarse)

        fine_potentials = model.obs_logdensity(y, fine)
        coarse_potentials = model.obs_logdensity(y, coarse)
        fine_log_increments[position] = log_evidence_increment(
            fine_log_weights, fine_potentials
        )
        coarse_log_increments[position] = log_evidence_increment(
            coarse_log_weights, coarse_potentials
        )
        fine_log_weights = fine_log_weights + fine_potentials
        coarse_log_weights = coarse_log_weights + coarse_potentials
        try:
            fine_weights = normalize_weights(fine_log_weights)
            coarse_weights = normalize_weights(coarse_log_weights)
        except DegenerateWeightsError as exc:
            raise exc.at(level=resolved.index, step=step) from exc

        fine_phi = model.test_function(fine)
        coarse_phi = model.test_function(coarse)
        fine_estimates[position] = weighted_mean(fine_weights, fine_phi)
        coarse_estimates[position] = weighted_mean(coarse_weights, coarse_phi)
        increments[position] = increment_estimate(
            fine_weights, coarse_weights, fine, coarse, model.test_function
        )
        fine_ess[position] = ess(fine_weights)
        coarse_ess[position] = ess(coarse_weights)
        index_coupling[position] = coupling_probability(fine_weights, coarse_weights)

        if should_resample(coarse_ess[position], particles, ess_fraction):
            indices = coupled_resample(fine_weights, coarse_weights, rng)
            fine = fine[indices.first]
            coarse = coarse[indices.second]
            common = update_common_ancestry(common, indices)
            resampled_increments[position] = float(
                np.mean(model.test_function(fine) - model.test_function(coarse))
            )
            fine_log_weights = np.zeros(particles)
            coarse_log_weights = np.zeros(particles)
            resampled[position] = True
        coupling[position] = np.count_nonzero(common) / particles

    if clamped or capped:
        logger.warning(
            "level %d: %d clamped and %d capped particle states",
            resolved.index,
            clamped,
            capped,
        )
    logger.debug(
        "level %d coupled filter: final alpha=%.6f, common=%.4f, %d resampling events",
        resolved.index,
        index_coupling[-1],
        coupling[-1],
        int(resampled.sum()),
    )
    return CoupledFilterOutput(
        level=resolved.index,
        particles=particles,
        increments=increments,
        fine_estimates=fine_estimates,
        coarse_estimates=coarse_estimates,
        fine_ess=fine_ess,
        coarse_ess=coarse_ess,
        resampled=resampled,
        coupling=coupling,
        index_coupling=index_coupling,
        resampled_increments=resampled_increments,
        fine_log_increments=fine_log_increments,
        coarse_log_increments=coarse_log_increments,
        cost=particles * resolved.coupled_steps * steps,
        clamped=clamped,
        capped=capped,
    )


def _run_level(
    task: tuple[int, int],
    *,
    model: DiffusionModel[Any],
    observations: tuple[Observation, ...],
    streams: StreamFactory,
    ess_fraction: float,
) -> FilterOutput | CoupledFilterOutput:
    """Run one level of a multilevel filter on its own stream."""
    level, particles = task
    rng = level_stream(streams, level)
    try:
        if level == 0:
            return pf_run(model, observations, level, particles, rng, ess_fraction)
        return coupled_pf_run(model, observations, level, particles, rng, ess_fraction)
    except (DegenerateWeightsError, PropagationError) as exc:
        raise exc.at(level=level) from exc


def mlpf_run(
    model: DiffusionModel[Any],
    observations: Sequence[Observation],
    allocation: LevelAllocation,
    streams: StreamFactory,
    ess_fraction: float = DEFAULTS.ess_fraction,
    *,
    workers: int | None = None,
) -> MLPFOutput:
    """Run the multilevel particle filter and sum its telescoping increments.

    Levels run independently, optionally on a process pool; the estimates are
    summed in ascending level order so results never depend on ``workers``.

    Raises:
        DegenerateWeightsError: A level degenerates; the message names it.
        PropagationError: A level's Euler step fails; the message names it.
    """
    check_ess_fraction(ess_fraction)
    frozen = tuple(observations)
    observation_values(frozen)
    run_level = functools.partial(
        _run_level,
        model=model,
        observations=frozen,
        streams=streams,
        ess_fraction=ess_fraction,
    )
    outputs = map_ordered(run_level, enumerate(allocation.particles), workers)
    base = outputs[0]
    if not isinstance(base, FilterOutput):
        raise ContractError("level 0 of a multilevel run must be a plain filter")
    levels = tuple(item for item in outputs[1:] if isinstance(item, CoupledFilterOutput))

    estimates = base.filter_estimates.copy()
    for item in levels:
        estimates = estimates + item.increments
    logger.info(
        "MLPF L=%d: final estimate %.6g at cost %d",
        allocation.max_level,
        estimates[-1],
        base.cost + sum(item.cost for item in levels),
    )
    return MLPFOutput(estimates=estimates, base=base, levels=levels, allocation=allocation)


def mlmc_samples(max_level: int, base_samples: int, beta: float) -> tuple[int, ...]:
    """Return ``N_l = ceil(N_0 * 2^(-(beta + gamma) l / 2))`` for ``l = 0..L``."""
    decay = (beta + EULER_COST_RATE) / 2.0
    return tuple(
        max(MIN_LEVEL_PARTICLES, math.ceil(base_samples * 2.0 ** (-level * decay)))
        for level in range(max_level + 1)
    )


def mlmc_run(
    model: DiffusionModel[Any],
    max_level: int,
    base_samples: int,
    streams: StreamFactory,
    *,
    beta: float | None = None,
) -> MLMCOutput:
    """Estimate ``E[phi(X_delta)]`` from ``x0`` with a multilevel Monte Carlo sum.

    Level 0 averages ``phi`` over plain Euler samples; level ``l`` averages the
    coupled differences ``phi(fine) - phi(coarse)``. ``beta`` defaults to 2
    for constant-diffusion models and 1 otherwise.

    Raises:
        ContractError: ``max_level < 0`` or ``base_samples < 2``.
    """
    if max_level < 0:
        raise ContractError("max_level must be non-negative")
    if base_samples < MIN_LEVEL_PARTICLES:
        raise ContractError("base_samples must be at least 2")
    if beta is None:
        beta = 2.0 if model.constant_diffusion else 1.0
    samples = mlmc_samples(max_level, base_samples, beta)

    means = np.empty(max_level + 1)
    variances = np.empty(max_level + 1)
    cost = 0
    for level, count in enumerate(samples):
        rng = streams.generator(level, MLMC_STREAM)
        start = np.full(count, model.initial_state, dtype=np.float64)
        if level == 0:
            values = model.test_function(simulate_transition(model, start, 0, rng))
        else:
            fine, coarse = simulate_coupled_transition(model, start, start, level, rng)
            values = model.test_function(fine) - model.test_function(coarse)
        means[level] = values.mean()
        variances[level] = values.var(ddof=1)
        cost += count * LevelIndex(level).coupled_steps
    return MLMCOutput(
        estimate=math.fsum(means.tolist()),
        means=means,
        variances=variances,
        samples=samples,
        cost=cost,
    )
