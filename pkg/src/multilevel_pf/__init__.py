"""Multilevel particle filters for discretely observed diffusions."""

from .allocation import LevelAllocation, level_allocation, predicted_cost_rate
from .config import DEFAULTS, ExperimentConfig, load_config
from .datasets import ingest_returns, simulate_dataset
from .errors import (
    ConfigurationError,
    ContractError,
    DegenerateWeightsError,
    DomainError,
    IngestionError,
    MultilevelPFError,
    PropagationError,
)
from .kernels import LevelIndex, euler_step, simulate_coupled_transition, simulate_transition
from .mlpf import coupled_pf_run, mlmc_run, mlpf_run
from .models import (
    CoupledFilterOutput,
    FilterOutput,
    MLPFOutput,
    Observation,
    ReferenceValues,
    observations_from_values,
)
from .oracle import kalman_gbm, kalman_ou, kalman_reference, reference_pf
from .particle_filter import normalizing_constant, pf_run
from .resampling import coupled_resample, ess, multinomial_resample, normalize_weights
from .rng import StreamFactory
from .sde import builtin_model, builtin_names
from .version import PACKAGE_VERSION

__version__ = PACKAGE_VERSION

__all__ = [
    "DEFAULTS",
    "ConfigurationError",
    "ContractError",
    "CoupledFilterOutput",
    "DegenerateWeightsError",
    "DomainError",
    "ExperimentConfig",
    "FilterOutput",
    "IngestionError",
    "LevelAllocation",
    "LevelIndex",
    "MLPFOutput",
    "MultilevelPFError",
    "Observation",
    "PropagationError",
    "ReferenceValues",
    "StreamFactory",
    "__version__",
    "builtin_model",
    "builtin_names",
    "coupled_pf_run",
    "coupled_resample",
    "ess",
    "euler_step",
    "ingest_returns",
    "kalman_gbm",
    "kalman_ou",
    "kalman_reference",
    "level_allocation",
    "load_config",
    "mlmc_run",
    "mlpf_run",
    "multinomial_resample",
    "normalize_weights",
    "normalizing_constant",
    "observations_from_values",
    "pf_run",
    "predicted_cost_rate",
    "reference_pf",
    "simulate_coupled_transition",
    "simulate_dataset",
    "simulate_transition",
]
