"""Shared base types for diffusion model definitions."""

import math
from abc import ABC, abstractmethod
from collections.abc import Mapping
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, ClassVar, Generic, TypeAlias, TypeVar, get_args, get_origin

import numpy as np
import numpy.typing as npt

from multilevel_pf.errors import ConfigurationError, DomainError

FloatArray: TypeAlias = npt.NDArray[np.float64]
StateLike: TypeAlias = float | FloatArray


@dataclass(frozen=True)
class ModelConstants:
    """Base constants container inherited by concrete model constants.

    Every model carries an initial state ``x0`` and an observation interval
    ``delta``. Subclasses add the named coefficients of their dynamics.
    """

    x0: float = 0.0
    delta: float = 1.0

    def __post_init__(self) -> None:
        """Reject non-finite constants and a non-positive interval."""
        for item in fields(self):
            value = getattr(self, item.name)
            if not math.isfinite(value):
                raise ConfigurationError(f"constant '{item.name}' must be finite")
        if self.delta <= 0.0:
            raise ConfigurationError("constant 'delta' must be positive")

    def to_dict(self) -> dict[str, float]:
        """Serialize the constants to a plain dictionary."""
        return asdict(self)

    @classmethod
    def from_dict(
        cls: type["ConstantsFromDictT"], raw: Mapping[str, float]
    ) -> "ConstantsFromDictT":
        """Instantiate constants from a plain dictionary."""
        return cls(**{key: float(value) for key, value in raw.items()})

    def replace(
        self: "ConstantsFromDictT", overrides: Mapping[str, float] | None = None
    ) -> "ConstantsFromDictT":
        """Return a copy with ``overrides`` applied.

        Raises:
            ConfigurationError: An override names a constant this model lacks.
        """
        if not overrides:
            return self
        known = {item.name for item in fields(self)}
        for key in overrides:
            if key not in known:
                allowed = ", ".join(sorted(known))
                raise ConfigurationError(
                    f"unknown constant '{key}' for {type(self).__name__}; "
                    f"known constants: {allowed}"
                )
        return replace(self, **{key: float(value) for key, value in overrides.items()})


ConstantsT = TypeVar("ConstantsT", bound=ModelConstants)
ConstantsFromDictT = TypeVar("ConstantsFromDictT", bound=ModelConstants)
ModelFromDictT = TypeVar("ModelFromDictT", bound="DiffusionModel[Any]")


def _require_finite(x: StateLike, what: str) -> FloatArray:
    """Return ``x`` as a float array, raising if any entry is not finite."""
    values = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise DomainError(f"{what} requires finite states")
    return values


class DiffusionModel(ABC, Generic[ConstantsT]):
    """A discretely observed diffusion ``dX = a(X)dt + b(X)dW`` with likelihood.

    All coefficient methods are vectorized: they accept a scalar or an array of
    particle states and return an array of matching shape. Instances are
    immutable after construction and safe to share across workers.
    """

    name: ClassVar[str] = "model"
    dimension: ClassVar[int] = 1
    constant_diffusion: ClassVar[bool] = False

    def __init__(self, constants: ConstantsT) -> None:
        """Initialize a model with explicit constants."""
        self._constants = constants

    @property
    def constants(self) -> ConstantsT:
        """Return the model's named constants."""
        return self._constants

    @property
    def initial_state(self) -> float:
        """Return the deterministic initial condition ``x0``."""
        return self._constants.x0

    @property
    def obs_interval(self) -> float:
        """Return the time ``delta`` between consecutive observations."""
        return self._constants.delta

    def to_dict(self) -> dict[str, float]:
        """Serialize this model's constants as a plain dictionary."""
        return self._constants.to_dict()

    @classmethod
    def from_dict(
        cls: type["ModelFromDictT"], raw: Mapping[str, float]
    ) -> "ModelFromDictT":
        """Instantiate a model from a plain constants dictionary."""
        constants_type = cls.constants_type()
        return cls(constants_type.from_dict(raw))

    @classmethod
    def default(cls: type["ModelFromDictT"]) -> "ModelFromDictT":
        """Instantiate the model with its published default constants."""
        return cls(cls.constants_type()())  # type: ignore[call-arg]

    @classmethod
    def constants_type(cls) -> type[ModelConstants]:
        """Infer the concrete constants type from ``DiffusionModel[Constants]``."""
        for klass in cls.__mro__:
            for base in getattr(klass, "__orig_bases__", ()):
                if get_origin(base) is DiffusionModel:
                    args = get_args(base)
                    if len(args) != 1:
                        break
                    constants_type = args[0]
                    if isinstance(constants_type, type) and issubclass(
                        constants_type, ModelConstants
                    ):
                        return constants_type
                    break
        raise TypeError(
            f"Could not infer constants type for model class {cls.__name__}. "
            "Ensure it subclasses DiffusionModel[ConcreteConstants]."
        )

    def __repr__(self) -> str:
        """Show the model name and its constants."""
        return f"{type(self).__name__}({self._constants!r})"

    def __eq__(self, other: object) -> bool:
        """Models are equal when class and constants agree."""
        if type(other) is not type(self):
            return NotImplemented
        return self._constants == other._constants  # type: ignore[attr-defined]

    def __hash__(self) -> int:
        """Hash by class and constants."""
        return hash((type(self), self._constants))

    def drift(self, x: StateLike) -> FloatArray:
        """Return ``a(x)`` after checking that ``x`` is finite."""
        return self._drift(_require_finite(x, f"{self.name} drift"))

    def diffusion(self, x: StateLike) -> FloatArray:
        """Return ``b(x)`` after checking that ``x`` is finite."""
        return self._diffusion(_require_finite(x, f"{self.name} diffusion"))

    def obs_logdensity(self, y: float | FloatArray, x: StateLike) -> FloatArray:
        """Return the natural-log observation density ``log G(y, x)``."""
        return self._obs_logdensity(
            np.asarray(y, dtype=np.float64),
            _require_finite(x, f"{self.name} observation density"),
        )

    def test_function(self, x: StateLike) -> FloatArray:
        """Return ``phi(x)``, the quantity whose filter mean is estimated."""
        return self._test_function(np.asarray(x, dtype=np.float64))

    def count_clamped(self, x: StateLike) -> int:
        """Return how many states fall below the model's admissible floor."""
        _ = x
        return 0

    def count_capped(self, x: StateLike) -> int:
        """Return how many states hit an overflow cap in ``phi``."""
        _ = x
        return 0

    @abstractmethod
    def _drift(self, x: FloatArray) -> FloatArray:
        """Evaluate the drift on validated states."""

    @abstractmethod
    def _diffusion(self, x: FloatArray) -> FloatArray:
        """Evaluate the noise scaling on validated states."""

    @abstractmethod
    def _obs_logdensity(self, y: FloatArray, x: FloatArray) -> FloatArray:
        """Evaluate ``log G(y, x)`` on validated states."""

    @abstractmethod
    def _test_function(self, x: FloatArray) -> FloatArray:
        """Evaluate ``phi`` on states."""

    @abstractmethod
    def sample_observation(
        self, x: StateLike, rng: np.random.Generator
    ) -> FloatArray:
        """Draw ``y ~ G(., x)`` for each state in ``x``."""


def drift(model: DiffusionModel[Any], x: StateLike) -> FloatArray:
    """Return the drift ``a(x)`` of ``model``."""
    return model.drift(x)


def diffusion(model: DiffusionModel[Any], x: StateLike) -> FloatArray:
    """Return the noise scaling ``b(x)`` of ``model``."""
    return model.diffusion(x)


def obs_logdensity(
    model: DiffusionModel[Any], y: float | FloatArray, x: StateLike
) -> FloatArray:
    """Return ``log G(y, x)`` for ``model``."""
    return model.obs_logdensity(y, x)
