"""Diffusion models with observation densities and test functions."""

from .base import (
    DiffusionModel,
    FloatArray,
    ModelConstants,
    StateLike,
    diffusion,
    drift,
    obs_logdensity,
)
from .gbm import GBMConstants, GeometricBrownianMotion
from .langevin import LangevinConstants, StudentTLangevin
from .nlm import NLMConstants, NonLinearDiffusion
from .ou import OrnsteinUhlenbeck, OUConstants
from .registry import builtin_model, builtin_names, resolve_model_type

__all__ = [
    "DiffusionModel",
    "FloatArray",
    "GBMConstants",
    "GeometricBrownianMotion",
    "LangevinConstants",
    "ModelConstants",
    "NLMConstants",
    "NonLinearDiffusion",
    "OUConstants",
    "OrnsteinUhlenbeck",
    "StateLike",
    "StudentTLangevin",
    "builtin_model",
    "builtin_names",
    "diffusion",
    "drift",
    "obs_logdensity",
    "resolve_model_type",
]
