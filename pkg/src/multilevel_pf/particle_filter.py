"""Bootstrap particle filter with Euler-discretized transitions.

Each observation step mutates the cloud through the level-``l`` kernel,
multiplies the accumulated weights by ``G(y_m, .)``, records the predictor and
filter estimates from the weighted cloud, and resamples multinomially when the
ESS falls below ``ess_fraction * N``. Resampling resets the weights to uniform.
Estimates are always recorded before resampling.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .config import DEFAULTS
from .errors import ContractError, DegenerateWeightsError
from .kernels import LevelIndex, as_level, simulate_transition
from .models import FilterOutput, Observation, observation_values
from .resampling import (
    ess,
    log_evidence_increment,
    multinomial_resample,
    normalize_weights,
    weighted_mean,
)
from .sde.base import DiffusionModel, FloatArray

logger = logging.getLogger(__name__)


@dataclass
class ParticleCloud:
    """Particle states with accumulated log weights at one observation step."""

    states: FloatArray
    log_weights: FloatArray
    level: LevelIndex
    step: int = 0
    clamped: int = field(default=0, repr=False)
    capped: int = field(default=0, repr=False)

    @classmethod
    def initial(
        cls, model: DiffusionModel[Any], particles: int, level: "int | LevelIndex"
    ) -> "ParticleCloud":
        """Place ``particles`` equally weighted particles at ``x0``."""
        if particles < 1:
            raise ContractError("a particle cloud needs at least one particle")
        return cls(
            states=np.full(particles, model.initial_state, dtype=np.float64),
            log_weights=np.zeros(particles, dtype=np.float64),
            level=as_level(level),
        )

    @property
    def size(self) -> int:
        """Return the number of particles."""
        return len(self.states)

    def weights(self) -> FloatArray:
        """Return the normalized weights."""
        return normalize_weights(self.log_weights)

    def ess(self) -> float:
        """Return the effective sample size of the current weights."""
        return ess(self.weights())


def check_ess_fraction(ess_fraction: float) -> None:
    """Raise :class:`ContractError` unless ``ess_fraction`` lies in ``(0, 1]``."""
    if not 0.0 < ess_fraction <= 1.0:
        raise ContractError(f"ess_fraction must lie in (0, 1], got {ess_fraction}")


def should_resample(effective_size: float, particles: int, ess_fraction: float) -> bool:
    """Return whether a cloud with this ESS triggers resampling."""
    return ess_fraction >= 1.0 or effective_size < ess_fraction * particles


def filter_estimate(
    cloud: ParticleCloud, model: DiffusionModel[Any], y: float
) -> float:
    """Return ``sum_i w_i phi(U_i)`` after weighting ``cloud`` by ``G(y, .)``.

    Raises:
        DegenerateWeightsError: Every updated weight is zero.
    """
    log_weights = cloud.log_weights + model.obs_logdensity(y, cloud.states)
    weights = normalize_weights(log_weights)
    return weighted_mean(weights, model.test_function(cloud.states))


def pf_run(
    model: DiffusionModel[Any],
    observations: Sequence[Observation],
    level: "int | LevelIndex",
    particles: int,
    rng: np.random.Generator,
    ess_fraction: float = DEFAULTS.ess_fraction,
) -> FilterOutput:
    """Run a level-``l`` particle filter over ``observations``.

    Args:
        model: Diffusion and observation model.
        observations: Observations ``y_1..y_n`` with indices ``1..n``.
        level: Discretization level of the transition kernel.
        particles: Cloud size ``N``, at least 2.
        rng: Stream consumed by mutation and resampling.
        ess_fraction: Resample when ``ESS < ess_fraction * N``; 1 resamples at
            every step.

    Raises:
        ContractError: Invalid ``particles`` or ``ess_fraction``.
        DegenerateWeightsError: All weights vanish; the message names the step.
        PropagationError: An Euler step leaves the finite reals.
    """
    if particles < 2:
        raise ContractError("a particle filter needs at least 2 particles")
    check_ess_fraction(ess_fraction)
    values = observation_values(observations)
    steps = len(values)
    cloud = ParticleCloud.initial(model, particles, level)

    predictor = np.empty(steps)
    filtered = np.empty(steps)
    ess_trace = np.empty(steps)
    resampled = np.zeros(steps, dtype=bool)
    log_increments = np.empty(steps)

    for position, y in enumerate(values):
        step = position + 1
        cloud.states = simulate_transition(model, cloud.states, cloud.level, rng)
        cloud.step = step
        cloud.clamped += model.count_clamped(cloud.states)
        cloud.capped += model.count_capped(cloud.states)
        phi = model.test_function(cloud.states)
        prior_weights = normalize_weights(cloud.log_weights)
        predictor[position] = weighted_mean(prior_weights, phi)

        log_potentials = model.obs_logdensity(y, cloud.states)
        updated = cloud.log_weights + log_potentials
        try:
            weights = normalize_weights(updated)
        except DegenerateWeightsError as exc:
            raise exc.at(level=cloud.level.index, step=step) from exc
        log_increments[position] = log_evidence_increment(cloud.log_weights, log_potentials)
        filtered[position] = weighted_mean(weights, phi)
        ess_trace[position] = ess(weights)

        if should_resample(ess_trace[position], particles, ess_fraction):
            ancestors = multinomial_resample(weights, rng)
            cloud.states = cloud.states[ancestors]
            cloud.log_weights = np.zeros(particles)
            resampled[position] = True
        else:
            cloud.log_weights = updated

    if cloud.clamped or cloud.capped:
        logger.warning(
            "level %d: %d clamped and %d capped particle states",
            cloud.level.index,
            cloud.clamped,
            cloud.capped,
        )
    logger.debug(
        "level %d filter: %d steps, %d resampling events",
        cloud.level.index,
        steps,
        int(resampled.sum()),
    )
    return FilterOutput(
        level=cloud.level.index,
        particles=particles,
        predictor_estimates=predictor,
        filter_estimates=filtered,
        ess=ess_trace,
        resampled=resampled,
        log_increments=log_increments,
        cost=particles * cloud.level.steps * steps,
        clamped=cloud.clamped,
        capped=cloud.capped,
    )


def normalizing_constant(output: FilterOutput, *, log: bool = False) -> float:
    """Return the product of per-step mean weights, or its log when ``log``."""
    log_value = output.log_normalizing_constant
    return log_value if log else float(np.exp(log_value))
