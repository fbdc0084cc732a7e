"""Per-level particle allocation and the multilevel complexity cases."""

import math
from dataclasses import dataclass
from typing import Any, Literal, TypeAlias

from .errors import ConfigurationError, ContractError
from .sde.base import DiffusionModel

AllocationMode: TypeAlias = Literal["standard", "explicit"]
Variant: TypeAlias = Literal["constant_diffusion", "general"]
ComplexityCase: TypeAlias = Literal["beta_gt_2gamma", "beta_eq_2gamma", "beta_lt_2gamma"]

EULER_WEAK_RATE = 1.0
EULER_COST_RATE = 1.0
MIN_LEVEL_PARTICLES = 2


@dataclass(frozen=True)
class LevelAllocation:
    """Particle counts ``N_0..N_L`` with the rates they were derived from."""

    max_level: int
    particles: tuple[int, ...]
    beta: float
    gamma: float = EULER_COST_RATE
    alpha: float = EULER_WEAK_RATE
    variant: Variant = "general"
    obs_interval: float = 1.0

    def __post_init__(self) -> None:
        """Validate lengths, ordering, and the per-level floor."""
        if self.max_level < 0:
            raise ContractError("max_level must be non-negative")
        if len(self.particles) != self.max_level + 1:
            raise ContractError(
                f"expected {self.max_level + 1} particle counts, "
                f"got {len(self.particles)}"
            )
        if any(count < MIN_LEVEL_PARTICLES for count in self.particles):
            raise ContractError(
                f"every level needs at least {MIN_LEVEL_PARTICLES} particles"
            )
        if any(a < b for a, b in zip(self.particles, self.particles[1:])):
            raise ContractError("particle counts must be non-increasing in level")

    @property
    def step_sizes(self) -> tuple[float, ...]:
        """Return ``h_l = delta * 2^-l`` for ``l = 0..L``."""
        return tuple(
            self.obs_interval * 2.0**-level for level in range(self.max_level + 1)
        )

    @property
    def case(self) -> ComplexityCase:
        """Return the complexity case of these rates."""
        return complexity_case(self.beta, self.gamma)


def _decay(beta: float, gamma: float) -> float:
    """Return the per-level exponent ``(beta + 2 gamma) / 4``."""
    return (beta + 2.0 * gamma) / 4.0


def level_allocation(
    max_level: int,
    model: DiffusionModel[Any],
    mode: AllocationMode = "standard",
    *,
    base_particles: int | None = None,
) -> LevelAllocation:
    """Allocate ``N_l = floor(N_0L * 2^(-l (beta + 2 gamma) / 4))`` particles.

    ``beta`` is 2 for constant-diffusion models and 1 otherwise, ``gamma`` is
    1. In ``standard`` mode ``N_0L = 2^(2L) L`` for constant diffusion and
    ``2^(9L/4)`` in general; ``explicit`` mode takes ``N_0L`` from
    ``base_particles``. Every level keeps at least two particles.

    Raises:
        ConfigurationError: ``max_level < 1`` or explicit mode without a
            positive ``base_particles``.
    """
    if max_level < 1:
        raise ConfigurationError("max_level must be at least 1")
    constant = model.constant_diffusion
    beta = 2.0 if constant else 1.0
    decay = _decay(beta, EULER_COST_RATE)

    if mode == "explicit":
        if base_particles is None or base_particles < MIN_LEVEL_PARTICLES:
            raise ConfigurationError(
                "explicit allocation needs base_particles of at least 2"
            )
        raw = [base_particles * 2.0 ** (-level * decay) for level in range(max_level + 1)]
    elif mode == "standard":
        # Combine exponents before exponentiating; powers of two stay exact.
        if constant:
            raw = [
                max_level * 2.0 ** (2 * max_level - level * decay)
                for level in range(max_level + 1)
            ]
        else:
            raw = [
                2.0 ** (2.25 * max_level - level * decay)
                for level in range(max_level + 1)
            ]
    else:
        raise ConfigurationError(f"unknown allocation mode {mode!r}")

    particles = tuple(max(MIN_LEVEL_PARTICLES, math.floor(value)) for value in raw)
    return LevelAllocation(
        max_level=max_level,
        particles=particles,
        beta=beta,
        variant="constant_diffusion" if constant else "general",
        obs_interval=model.obs_interval,
    )


def complexity_case(beta: float, gamma: float = EULER_COST_RATE) -> ComplexityCase:
    """Classify the strong and cost rates into the three multilevel cases."""
    if math.isclose(beta, 2.0 * gamma):
        return "beta_eq_2gamma"
    return "beta_gt_2gamma" if beta > 2.0 * gamma else "beta_lt_2gamma"


def predicted_cost_rate(
    method: Literal["PF", "MLPF"],
    beta: float,
    gamma: float = EULER_COST_RATE,
    alpha: float = EULER_WEAK_RATE,
) -> float:
    """Return the predicted slope of log cost against log MSE.

    A single-level filter pays ``-(1 + gamma / (2 alpha))``. The multilevel
    filter pays ``-1`` when ``beta >= 2 gamma`` (with a logarithmic penalty in
    the balanced case) and ``-1 - (2 gamma - beta) / (4 alpha)`` otherwise.
    """
    if method == "PF":
        return -(1.0 + gamma / (2.0 * alpha))
    if complexity_case(beta, gamma) == "beta_lt_2gamma":
        return -1.0 - (2.0 * gamma - beta) / (4.0 * alpha)
    return -1.0
