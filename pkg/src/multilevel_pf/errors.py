"""Exception hierarchy shared by the filtering library and its CLIs."""

import functools
from typing import Any


def _location(level: int | None, step: int | None, step_label: str) -> str:
    """Render a ``level L, <step_label> S: `` message prefix."""
    parts = []
    if level is not None:
        parts.append(f"level {level}")
    if step is not None:
        parts.append(f"{step_label} {step}")
    return f"{', '.join(parts)}: " if parts else ""


class MultilevelPFError(Exception):
    """Base class for every error raised by multilevel-pf."""


class ConfigurationError(MultilevelPFError, ValueError):
    """Raised when a config key, model name, or constant is invalid."""


class DomainError(MultilevelPFError, ValueError):
    """Raised when a numeric input lies outside the function's domain."""


class ContractError(MultilevelPFError, ValueError):
    """Raised when a caller violates an API precondition."""


class PropagationError(MultilevelPFError, ArithmeticError):
    """Raised when an Euler step produces a non-finite state."""

    def __init__(self, message: str, *, step: int, level: int | None = None) -> None:
        """Record the 0-based Euler step index and, once known, the level."""
        super().__init__(f"{_location(level, step, 'Euler step')}{message}")
        self.detail = message
        self.step = step
        self.level = level

    def at(self, *, level: int) -> "PropagationError":
        """Return a copy of this error located at ``level``."""
        return PropagationError(self.detail, step=self.step, level=level)

    def __reduce__(self) -> tuple[Any, ...]:
        """Pickle together with the keyword fields."""
        rebuild = functools.partial(PropagationError, step=self.step, level=self.level)
        return rebuild, (self.detail,)


class DegenerateWeightsError(MultilevelPFError, ArithmeticError):
    """Raised when every importance weight of a cloud vanishes."""

    def __init__(
        self,
        message: str,
        *,
        level: int | None = None,
        step: int | None = None,
    ) -> None:
        """Attach the failing level and observation step to the message."""
        super().__init__(f"{_location(level, step, 'step')}{message}")
        self.detail = message
        self.level = level
        self.step = step

    def at(
        self, *, level: int | None = None, step: int | None = None
    ) -> "DegenerateWeightsError":
        """Return a copy of this error located at ``level``/``step``."""
        return DegenerateWeightsError(
            self.detail,
            level=self.level if level is None else level,
            step=self.step if step is None else step,
        )

    def __reduce__(self) -> tuple[Any, ...]:
        """Pickle together with the keyword fields."""
        rebuild = functools.partial(
            DegenerateWeightsError, level=self.level, step=self.step
        )
        return rebuild, (self.detail,)


class IngestionError(MultilevelPFError, ValueError):
    """Raised when a return-series file cannot be ingested."""

    def __init__(self, message: str, *, row: int | None = None) -> None:
        """Record the 1-based file line that failed, when one is known."""
        super().__init__(f"row {row}: {message}" if row is not None else message)
        self.row = row
