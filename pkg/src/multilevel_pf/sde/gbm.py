"""Geometric Brownian motion observed through its logarithm.

Dynamics: ``dX = mu X dt + sigma X dW`` with ``Y_k | X ~ N(log X, tau2)`` and
``phi(x) = x``. Euler steps can leave the positive half-line; states are
clamped to ``state_floor`` before ``log`` is taken and the filters count how
often that happens.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from multilevel_pf.config import DEFAULTS
from multilevel_pf.errors import ConfigurationError
from multilevel_pf.sde.base import DiffusionModel, FloatArray, ModelConstants, StateLike


@dataclass(frozen=True)
class GBMConstants(ModelConstants):
    """Constants of the geometric Brownian motion example."""

    x0: float = 1.0
    delta: float = 0.001
    mu: float = 0.02
    sigma: float = 0.2
    tau2: float = 0.01

    def __post_init__(self) -> None:
        """Require a positive start and a positive noise variance."""
        super().__post_init__()
        if self.x0 <= 0.0:
            raise ConfigurationError("constant 'x0' must be positive for GBM")
        if self.tau2 <= 0.0:
            raise ConfigurationError("constant 'tau2' must be positive")


class GeometricBrownianMotion(DiffusionModel[GBMConstants]):
    """Linear-growth diffusion with state-proportional noise."""

    name = "GBM"
    constant_diffusion = False

    def _drift(self, x: FloatArray) -> FloatArray:
        """Return ``mu x``."""
        return self.constants.mu * x

    def _diffusion(self, x: FloatArray) -> FloatArray:
        """Return ``sigma x``."""
        return self.constants.sigma * x

    def _obs_logdensity(self, y: FloatArray, x: FloatArray) -> FloatArray:
        """Return ``log N(y; log max(x, floor), tau2)``."""
        location = np.log(np.maximum(x, DEFAULTS.state_floor))
        return stats.norm.logpdf(y, loc=location, scale=np.sqrt(self.constants.tau2))

    def _test_function(self, x: FloatArray) -> FloatArray:
        """Return ``x``."""
        return x

    def count_clamped(self, x: StateLike) -> int:
        """Count states at or below the positivity floor."""
        return int(np.count_nonzero(np.asarray(x) <= DEFAULTS.state_floor))

    def sample_observation(
        self, x: StateLike, rng: np.random.Generator
    ) -> FloatArray:
        """Draw ``y = log max(x, floor) + sqrt(tau2) * xi``."""
        states = np.asarray(x, dtype=np.float64)
        noise = rng.standard_normal(states.shape)
        location = np.log(np.maximum(states, DEFAULTS.state_floor))
        return location + np.sqrt(self.constants.tau2) * noise
