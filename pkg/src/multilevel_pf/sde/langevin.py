"""Langevin diffusion targeting a Student-t density, a stochastic volatility model.

Dynamics: ``dX = 0.5 grad log pi(X) dt + sigma dW`` where ``pi`` is the
Student-t density with ``nu`` degrees of freedom, so
``grad log pi(x) = -(nu + 1) x / (nu + x^2)``. Observations are returns
``Y_k | X ~ N(0, tau2 exp(X))`` and ``phi(x) = tau2 exp(x)`` is the
instantaneous variance. Exponents are capped at ``exponent_cap`` so neither
``phi`` nor the observation scale overflows.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from multilevel_pf.config import DEFAULTS
from multilevel_pf.errors import ConfigurationError
from multilevel_pf.sde.base import DiffusionModel, FloatArray, ModelConstants, StateLike


@dataclass(frozen=True)
class LangevinConstants(ModelConstants):
    """Constants of the Student-t Langevin example."""

    x0: float = 0.0
    delta: float = 1.0
    nu: float = 10.0
    sigma: float = 1.0
    tau2: float = 1.0

    def __post_init__(self) -> None:
        """Require positive degrees of freedom and observation scale."""
        super().__post_init__()
        if self.nu <= 0.0:
            raise ConfigurationError("constant 'nu' must be positive")
        if self.tau2 <= 0.0:
            raise ConfigurationError("constant 'tau2' must be positive")


def _capped(x: FloatArray) -> FloatArray:
    """Clip exponents into ``[-cap, cap]``."""
    return np.clip(x, -DEFAULTS.exponent_cap, DEFAULTS.exponent_cap)


class StudentTLangevin(DiffusionModel[LangevinConstants]):
    """Overdamped Langevin dynamics for a Student-t stationary law."""

    name = "LANGEVIN"
    constant_diffusion = True

    def _drift(self, x: FloatArray) -> FloatArray:
        """Return ``-0.5 (nu + 1) x / (nu + x^2)``."""
        nu = self.constants.nu
        return -0.5 * (nu + 1.0) * x / (nu + x * x)

    def _diffusion(self, x: FloatArray) -> FloatArray:
        """Return ``sigma`` broadcast to the state shape."""
        return np.full_like(x, self.constants.sigma)

    def _obs_logdensity(self, y: FloatArray, x: FloatArray) -> FloatArray:
        """Return ``log N(y; 0, tau2 exp(x))``."""
        scale = np.sqrt(self.constants.tau2) * np.exp(0.5 * _capped(x))
        return stats.norm.logpdf(y, loc=0.0, scale=scale)

    def _test_function(self, x: FloatArray) -> FloatArray:
        """Return ``tau2 exp(x)`` with the exponent capped."""
        return self.constants.tau2 * np.exp(np.minimum(x, DEFAULTS.exponent_cap))

    def count_capped(self, x: StateLike) -> int:
        """Count states whose exponent exceeds the overflow cap."""
        return int(np.count_nonzero(np.asarray(x) > DEFAULTS.exponent_cap))

    def sample_observation(
        self, x: StateLike, rng: np.random.Generator
    ) -> FloatArray:
        """Draw a return ``y = sqrt(tau2 exp(x)) * xi``."""
        states = np.asarray(x, dtype=np.float64)
        noise = rng.standard_normal(states.shape)
        return np.sqrt(self.constants.tau2) * np.exp(0.5 * _capped(states)) * noise
