"""Euler-Maruyama transition kernels over one observation interval.

Level ``l`` splits the interval ``delta`` into ``k_l = 2^l`` steps of size
``h_l = delta * 2^-l``. The coupled kernel advances a fine chain at level
``l`` and a coarse chain at level ``l - 1`` with shared Gaussian draws: each
coarse increment is ``sqrt(h_l) * (xi_2m + xi_2m+1)``, the sum of the two
fine increments it spans, so the coarse marginal is exactly the level
``l - 1`` kernel.

Draws are step-major: one standard normal per particle per fine step, in
step order. The coarse chain consumes no draws of its own.
"""

from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import ContractError, PropagationError
from .sde.base import DiffusionModel, FloatArray, StateLike


@dataclass(frozen=True)
class LevelIndex:
    """A discretization level ``l`` with ``k_l = 2^l`` steps per interval."""

    index: int

    def __post_init__(self) -> None:
        """Reject negative levels."""
        if self.index < 0:
            raise ContractError(f"level must be non-negative, got {self.index}")

    @property
    def steps(self) -> int:
        """Return ``k_l = 2^l``."""
        return 2**self.index

    @property
    def coupled_steps(self) -> int:
        """Return ``k_l + k_(l-1)``, the Euler steps of one coupled transition."""
        if self.index == 0:
            return self.steps
        return self.steps + self.steps // 2

    def step_size(self, obs_interval: float) -> float:
        """Return ``h_l = delta * 2^-l``."""
        return obs_interval * 2.0**-self.index


def as_level(level: "int | LevelIndex") -> LevelIndex:
    """Coerce an integer level into a :class:`LevelIndex`."""
    return level if isinstance(level, LevelIndex) else LevelIndex(int(level))


def _checked(states: FloatArray, step: int) -> FloatArray:
    """Raise :class:`PropagationError` unless every state is finite."""
    if not np.all(np.isfinite(states)):
        raise PropagationError("non-finite state", step=step)
    return states


def euler_step(
    model: DiffusionModel[Any],
    x: StateLike,
    h: float,
    xi: StateLike,
    *,
    step: int = 0,
) -> FloatArray:
    """Advance ``x`` by one step: ``x + h a(x) + sqrt(h) b(x) xi``.

    Args:
        model: Diffusion supplying ``a`` and ``b``.
        x: Current state or array of particle states.
        h: Positive step size.
        xi: Standard Gaussian draw(s) broadcastable against ``x``.
        step: Index reported when the result is not finite.

    Raises:
        ContractError: ``h`` is not positive.
        PropagationError: The new state is not finite.
    """
    if not h > 0.0:
        raise ContractError(f"step size must be positive, got {h}")
    states = np.asarray(x, dtype=np.float64)
    with np.errstate(over="ignore", invalid="ignore"):
        moved = states + h * model.drift(states) + np.sqrt(h) * model.diffusion(states) * xi
    return _checked(moved, step)


def simulate_transition(
    model: DiffusionModel[Any],
    x: StateLike,
    level: "int | LevelIndex",
    rng: np.random.Generator,
) -> FloatArray:
    """Apply ``k_l`` Euler steps of size ``h_l`` to ``x``.

    Consumes exactly ``k_l`` standard normal draws per state.
    """
    resolved = as_level(level)
    h = resolved.step_size(model.obs_interval)
    states = np.asarray(x, dtype=np.float64)
    for step in range(resolved.steps):
        xi = rng.standard_normal(states.shape)
        states = euler_step(model, states, h, xi, step=step)
    return states


def _coarse_step(
    model: DiffusionModel[Any],
    x: FloatArray,
    h_fine: float,
    xi_first: FloatArray,
    xi_second: FloatArray,
    step: int,
) -> FloatArray:
    """Advance the coarse chain by ``2 h_fine`` with two fine increments."""
    scale = np.sqrt(h_fine) * model.diffusion(x)
    with np.errstate(over="ignore", invalid="ignore"):
        # Same association as two fine steps, so a zero drift and constant
        # diffusion reproduce the fine path bit for bit.
        moved = x + (2.0 * h_fine) * model.drift(x) + scale * xi_first + scale * xi_second
    return _checked(moved, step)


def simulate_coupled_transition(
    model: DiffusionModel[Any],
    x_fine: StateLike,
    x_coarse: StateLike,
    level: "int | LevelIndex",
    rng: np.random.Generator,
) -> tuple[FloatArray, FloatArray]:
    """Advance a fine/coarse pair through one interval with shared noise.

    The fine chain takes ``k_l`` steps of size ``h_l``; the coarse chain takes
    ``k_(l-1)`` steps of size ``h_(l-1)`` driven by pairwise sums of the fine
    draws.

    Raises:
        ContractError: ``level`` is 0 or the two state arrays differ in shape.
        PropagationError: Either chain leaves the finite reals.
    """
    resolved = as_level(level)
    if resolved.index == 0:
        raise ContractError("coupled transitions need level >= 1")
    fine = np.asarray(x_fine, dtype=np.float64)
    coarse = np.asarray(x_coarse, dtype=np.float64)
    if fine.shape != coarse.shape:
        raise ContractError(
            f"fine and coarse states differ in shape: {fine.shape} vs {coarse.shape}"
        )
    h = resolved.step_size(model.obs_interval)
    for coarse_step in range(resolved.steps // 2):
        xi_first = rng.standard_normal(fine.shape)
        fine = euler_step(model, fine, h, xi_first, step=2 * coarse_step)
        xi_second = rng.standard_normal(fine.shape)
        fine = euler_step(model, fine, h, xi_second, step=2 * coarse_step + 1)
        coarse = _coarse_step(model, coarse, h, xi_first, xi_second, coarse_step)
    return fine, coarse
