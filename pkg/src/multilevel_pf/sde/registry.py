"""Model registry and name resolution helpers."""

from collections.abc import Mapping
from importlib import import_module
from typing import Any, TypeAlias

from multilevel_pf.errors import ConfigurationError
from multilevel_pf.sde.base import DiffusionModel
from multilevel_pf.sde.catalog import BUILTIN_MODEL_PATHS

ModelType: TypeAlias = type[DiffusionModel[Any]]

_MODEL_TYPES_BY_NAME: dict[str, ModelType] = {}


def _load_model_type(model_path: str) -> ModelType:
    """Load one concrete model class from a dotted import path."""
    module_name, _, class_name = model_path.rpartition(".")
    module = import_module(module_name)
    model_type = getattr(module, class_name)
    if not isinstance(model_type, type) or not issubclass(model_type, DiffusionModel):
        raise TypeError(f"{model_path} is not a DiffusionModel subclass")
    return model_type


def builtin_names() -> tuple[str, ...]:
    """Return the canonical builtin model names in catalog order."""
    return tuple(BUILTIN_MODEL_PATHS)


def resolve_model_type(name: str) -> ModelType:
    """Resolve a builtin model class from its case-insensitive name.

    Raises:
        ConfigurationError: ``name`` is not a builtin model.
    """
    key = name.strip().upper()
    resolved = _MODEL_TYPES_BY_NAME.get(key)
    if resolved is None:
        model_path = BUILTIN_MODEL_PATHS.get(key)
        if model_path is None:
            known = ", ".join(BUILTIN_MODEL_PATHS)
            raise ConfigurationError(f"unknown model '{name}'. Known models: {known}")
        resolved = _load_model_type(model_path)
        _MODEL_TYPES_BY_NAME[key] = resolved
    return resolved


def builtin_model(
    name: str, overrides: Mapping[str, float] | None = None
) -> DiffusionModel[Any]:
    """Build a builtin model with its published constants and ``overrides``.

    Args:
        name: One of ``OU``, ``GBM``, ``LANGEVIN``, ``NLM`` (any case).
        overrides: Constants to replace, keyed by their config names.

    Raises:
        ConfigurationError: Unknown model name or constant, or an override
            that breaks a constant's range.
    """
    model_type = resolve_model_type(name)
    constants = model_type.constants_type()().replace(overrides)
    return model_type(constants)
