"""Ornstein-Uhlenbeck diffusion with Gaussian observations.

Dynamics: ``dX = theta (mu - X) dt + sigma dW`` with ``Y_k | X ~ N(X, tau2)``
and ``phi(x) = x``. The transition law is Gaussian, so the exact filter is a
Kalman recursion (see :mod:`multilevel_pf.oracle`).
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from multilevel_pf.errors import ConfigurationError
from multilevel_pf.sde.base import DiffusionModel, FloatArray, ModelConstants, StateLike


@dataclass(frozen=True)
class OUConstants(ModelConstants):
    """Constants of the Ornstein-Uhlenbeck example."""

    x0: float = 0.0
    delta: float = 0.5
    theta: float = 1.0
    mu: float = 0.0
    sigma: float = 0.5
    tau2: float = 0.2

    def __post_init__(self) -> None:
        """Reject a non-positive noise variance."""
        super().__post_init__()
        if self.tau2 <= 0.0:
            raise ConfigurationError("constant 'tau2' must be positive")


class OrnsteinUhlenbeck(DiffusionModel[OUConstants]):
    """Mean-reverting Gaussian diffusion with constant noise."""

    name = "OU"
    constant_diffusion = True

    def _drift(self, x: FloatArray) -> FloatArray:
        """Return ``theta (mu - x)``."""
        c = self.constants
        return c.theta * (c.mu - x)

    def _diffusion(self, x: FloatArray) -> FloatArray:
        """Return ``sigma`` broadcast to the state shape."""
        return np.full_like(x, self.constants.sigma)

    def _obs_logdensity(self, y: FloatArray, x: FloatArray) -> FloatArray:
        """Return ``log N(y; x, tau2)``."""
        return stats.norm.logpdf(y, loc=x, scale=np.sqrt(self.constants.tau2))

    def _test_function(self, x: FloatArray) -> FloatArray:
        """Return ``x``."""
        return x

    def sample_observation(
        self, x: StateLike, rng: np.random.Generator
    ) -> FloatArray:
        """Draw ``y = x + sqrt(tau2) * xi``."""
        states = np.asarray(x, dtype=np.float64)
        noise = rng.standard_normal(states.shape)
        return states + np.sqrt(self.constants.tau2) * noise
