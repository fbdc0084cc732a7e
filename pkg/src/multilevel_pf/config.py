"""Numeric defaults and experiment configuration for multilevel-pf."""

import json
import math
from collections.abc import Mapping
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Literal, TypeAlias

from .errors import ConfigurationError

MethodName: TypeAlias = Literal["PF", "MLPF", "both"]

CONFIG_LINE_PREFIX = "# config: "
MODEL_CONSTANT_KEYS: tuple[str, ...] = (
    "theta",
    "mu",
    "sigma",
    "tau2",
    "s",
    "nu",
    "x0",
    "delta",
)


@dataclass(frozen=True)
class Defaults:
    """Tunable numeric defaults used across filters, oracles, and studies."""

    ess_fraction: float = 0.25
    repetitions: int = 100

    coupling_tolerance: float = 1e-12
    state_floor: float = 1e-10
    exponent_cap: float = 700.0

    truth_level: int = 10
    reference_level: int = 9
    reference_particles: int = 100_000
    reference_seeds: int = 10

    rate_particles: int = 500
    rate_ess_fraction: float = 1.0
    rate_level_max: int = 7
    cost_level_min: int = 1
    cost_level_max: int = 5

    synthetic_observations: int = 50
    synthetic_returns_length: int = 999


DEFAULTS = Defaults()


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved settings for one CLI command.

    Model constants live in ``overrides`` and are spelled with the config names
    ``theta, mu, sigma, tau2, s, nu, x0, delta``; every other key maps to a
    field of this dataclass.
    """

    model: str = "OU"
    overrides: dict[str, float] = field(default_factory=dict)
    method: MethodName = "both"
    level: int = 4
    level_min: int = DEFAULTS.cost_level_min
    level_max: int = DEFAULTS.cost_level_max
    repetitions: int = DEFAULTS.repetitions
    particles: int | None = None
    ess_fraction: float = DEFAULTS.ess_fraction
    rate_ess_fraction: float = DEFAULTS.rate_ess_fraction
    seed: int = 0
    observations: int = DEFAULTS.synthetic_observations
    data: str | None = None
    returns: str | None = None
    truth: str | None = None
    truth_level: int = DEFAULTS.truth_level
    reference_level: int = DEFAULTS.reference_level
    reference_particles: int = DEFAULTS.reference_particles
    reference_seeds: int = DEFAULTS.reference_seeds
    record_walltime: bool = False
    workers: int | None = None

    def __post_init__(self) -> None:
        """Validate value ranges before any computation starts."""
        if self.method not in ("PF", "MLPF", "both"):
            raise ConfigurationError(
                f"method must be one of PF, MLPF, both; got {self.method!r}"
            )
        if not 0.0 < self.ess_fraction <= 1.0:
            raise ConfigurationError("ess_fraction must lie in (0, 1]")
        if not 0.0 < self.rate_ess_fraction <= 1.0:
            raise ConfigurationError("rate_ess_fraction must lie in (0, 1]")
        if self.level < 0 or self.level_min < 0 or self.level_max < self.level_min:
            raise ConfigurationError(
                "levels must be non-negative with level_min <= level_max"
            )
        if self.repetitions < 1:
            raise ConfigurationError("repetitions must be positive")
        if self.particles is not None and self.particles < 2:
            raise ConfigurationError("particles must be at least 2")
        if self.observations < 1:
            raise ConfigurationError("observations must be positive")
        if self.data is not None and self.returns is not None:
            raise ConfigurationError("set at most one of 'data' and 'returns'")
        if self.reference_seeds < 2:
            raise ConfigurationError("reference_seeds must be at least 2")
        if self.workers is not None and self.workers < 1:
            raise ConfigurationError("workers must be positive")
        for key, value in self.overrides.items():
            if key not in MODEL_CONSTANT_KEYS:
                raise ConfigurationError(f"unknown model constant '{key}'")
            if not math.isfinite(value):
                raise ConfigurationError(f"model constant '{key}' must be finite")

    def to_dict(self) -> dict[str, object]:
        """Serialize to the flat key-value form used in config files."""
        raw = asdict(self)
        overrides = raw.pop("overrides")
        raw.update(overrides)
        return raw

    @classmethod
    def from_dict(cls, raw: Mapping[str, object]) -> "ExperimentConfig":
        """Build a config from a flat mapping, rejecting unknown keys."""
        known = {item.name for item in fields(cls)} - {"overrides"}
        overrides: dict[str, float] = {}
        kwargs: dict[str, object] = {}
        for key, value in raw.items():
            if key in MODEL_CONSTANT_KEYS:
                if isinstance(value, bool) or not isinstance(value, int | float):
                    raise ConfigurationError(f"'{key}' must be a number")
                overrides[key] = float(value)
            elif key in known:
                kwargs[key] = value
            else:
                allowed = ", ".join(sorted(known | set(MODEL_CONSTANT_KEYS)))
                raise ConfigurationError(
                    f"unknown config key '{key}'. Known keys: {allowed}"
                )
        try:
            return cls(overrides=overrides, **kwargs)  # type: ignore[arg-type]
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from exc

    def with_overrides(self, **changes: object) -> "ExperimentConfig":
        """Return a copy with non-``None`` keyword changes applied."""
        applied = {key: value for key, value in changes.items() if value is not None}
        return replace(self, **applied)  # type: ignore[arg-type]

    def to_json(self) -> str:
        """Render the config as canonical single-line JSON."""
        return json.dumps(self.to_dict(), sort_keys=True)


def load_config(path: str | Path) -> ExperimentConfig:
    """Load a config from a JSON file or from a result CSV's embedded config.

    Args:
        path: A flat JSON object file, or any CSV written by the ``mlpf`` CLI
            whose first line is ``# config: {...}``.

    Raises:
        FileNotFoundError: ``path`` does not exist.
        ConfigurationError: The payload is not a flat JSON object or holds
            unknown keys or invalid values.
    """
    config_path = Path(path)
    if not config_path.is_file():
        raise FileNotFoundError(f"{config_path}: No such file")
    text = config_path.read_text(encoding="utf-8")
    first_line = text.split("\n", 1)[0]
    if first_line.startswith(CONFIG_LINE_PREFIX):
        text = first_line[len(CONFIG_LINE_PREFIX) :]
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"{config_path}: invalid JSON on line {exc.lineno}: {exc.msg}"
        ) from exc
    if not isinstance(payload, dict):
        raise ConfigurationError(f"{config_path}: config must be a JSON object")
    nested = [key for key, value in payload.items() if isinstance(value, dict)]
    if nested:
        raise ConfigurationError(
            f"{config_path}: config must be flat; nested key '{nested[0]}'"
        )
    return ExperimentConfig.from_dict(payload)
