"""Mean-reverting diffusion with a state-dependent noise scale.

Dynamics: ``dX = theta (mu - X) dt + sigma / sqrt(1 + X^2) dW`` with Laplace
observations ``Y_k | X ~ Laplace(X, s)`` and ``phi(x) = x``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from multilevel_pf.errors import ConfigurationError
from multilevel_pf.sde.base import DiffusionModel, FloatArray, ModelConstants, StateLike


@dataclass(frozen=True)
class NLMConstants(ModelConstants):
    """Constants of the non-linear diffusion example."""

    x0: float = 0.0
    delta: float = 0.5
    theta: float = 1.0
    mu: float = 0.0
    sigma: float = 1.0
    s: float = math.sqrt(0.1)

    def __post_init__(self) -> None:
        """Require a positive Laplace scale."""
        super().__post_init__()
        if self.s <= 0.0:
            raise ConfigurationError("constant 's' must be positive")


class NonLinearDiffusion(DiffusionModel[NLMConstants]):
    """Ornstein-Uhlenbeck drift with noise damped away from the origin."""

    name = "NLM"
    constant_diffusion = False

    def _drift(self, x: FloatArray) -> FloatArray:
        """Return ``theta (mu - x)``."""
        c = self.constants
        return c.theta * (c.mu - x)

    def _diffusion(self, x: FloatArray) -> FloatArray:
        """Return ``sigma / sqrt(1 + x^2)``."""
        return self.constants.sigma / np.sqrt(1.0 + x * x)

    def _obs_logdensity(self, y: FloatArray, x: FloatArray) -> FloatArray:
        """Return ``log Laplace(y; x, s)``."""
        return stats.laplace.logpdf(y, loc=x, scale=self.constants.s)

    def _test_function(self, x: FloatArray) -> FloatArray:
        """Return ``x``."""
        return x

    def sample_observation(
        self, x: StateLike, rng: np.random.Generator
    ) -> FloatArray:
        """Draw ``y ~ Laplace(x, s)``."""
        states = np.asarray(x, dtype=np.float64)
        return rng.laplace(loc=states, scale=self.constants.s, size=states.shape)
