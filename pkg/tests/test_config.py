"""Tests for experiment configuration and worker resolution."""

from __future__ import annotations

import json

import pytest

from multilevel_pf.config import CONFIG_LINE_PREFIX, ExperimentConfig, load_config
from multilevel_pf.errors import ConfigurationError
from multilevel_pf.workers import WORKERS_ENV_VAR, map_ordered, resolve_workers


def test_flat_json_config_loads(write_text_file) -> None:
    """Flat JSON keys should map onto fields and model constants."""
    path = write_text_file(
        "config.json",
        json.dumps({"model": "NLM", "level": 3, "sigma": 0.4, "record_walltime": True}),
    )

    config = load_config(path)

    assert config.model == "NLM"
    assert config.level == 3
    assert config.overrides == {"sigma": 0.4}
    assert config.record_walltime is True


def test_config_line_of_result_file_loads(write_text_file) -> None:
    """A result CSV's first-line config should reload the same settings."""
    original = ExperimentConfig(model="GBM", seed=9, overrides={"tau2": 0.01})
    path = write_text_file(
        "pf.csv", f"{CONFIG_LINE_PREFIX}{original.to_json()}\nstep,filter\n1,0.5\n"
    )

    assert load_config(path) == original


def test_unknown_key_lists_known_keys(write_text_file) -> None:
    """Unknown keys should fail and name the allowed keys."""
    path = write_text_file("config.json", '{"levels": 3}')

    with pytest.raises(ConfigurationError, match="unknown config key 'levels'") as raised:
        load_config(path)

    assert "level_max" in str(raised.value)


def test_nested_keys_are_rejected(write_text_file) -> None:
    """Configs are flat key-value objects."""
    path = write_text_file("config.json", '{"model": "OU", "constants": {"theta": 1}}')

    with pytest.raises(ConfigurationError, match="nested key 'constants'"):
        load_config(path)


def test_invalid_json_reports_line(write_text_file) -> None:
    """Malformed JSON should name the file and line."""
    path = write_text_file("config.json", '{\n"model": }')

    with pytest.raises(ConfigurationError, match="invalid JSON on line 2"):
        load_config(path)


def test_non_object_json_is_rejected(write_text_file) -> None:
    """A JSON list is not a config."""
    path = write_text_file("config.json", "[1, 2]")

    with pytest.raises(ConfigurationError, match="JSON object"):
        load_config(path)


def test_missing_config_file(tmp_path) -> None:
    """Missing config files should raise ``FileNotFoundError``."""
    with pytest.raises(FileNotFoundError, match="No such file"):
        load_config(tmp_path / "absent.json")


@pytest.mark.parametrize(
    ("changes", "message"),
    (
        ({"method": "SMC"}, "method must be one of"),
        ({"ess_fraction": 0.0}, "ess_fraction"),
        ({"rate_ess_fraction": 1.5}, "rate_ess_fraction must lie"),
        ({"level_min": 4, "level_max": 2}, "level_min <= level_max"),
        ({"particles": 1}, "particles must be at least 2"),
        ({"data": "a.csv", "returns": "b.csv"}, "at most one"),
        ({"reference_seeds": 1}, "reference_seeds"),
        ({"workers": 0}, "workers must be positive"),
    ),
)
def test_invalid_values_are_rejected(changes: dict[str, object], message: str) -> None:
    """Out-of-range settings should fail before any computation."""
    with pytest.raises(ConfigurationError, match=message):
        ExperimentConfig.from_dict(changes)


def test_constants_must_be_numbers() -> None:
    """Model constants must be numeric and finite."""
    with pytest.raises(ConfigurationError, match="'theta' must be a number"):
        ExperimentConfig.from_dict({"theta": "fast"})
    with pytest.raises(ConfigurationError, match="must be finite"):
        ExperimentConfig.from_dict({"theta": float("inf")})


def test_with_overrides_skips_none() -> None:
    """``None`` changes should leave fields at their current values."""
    config = ExperimentConfig(seed=5)

    assert config.with_overrides(seed=None).seed == 5
    assert config.with_overrides(seed=7).seed == 7


def test_to_dict_flattens_constants() -> None:
    """Model constants should sit beside the other keys."""
    flat = ExperimentConfig(overrides={"theta": 2.0}).to_dict()

    assert flat["theta"] == 2.0
    assert "overrides" not in flat


def test_resolve_workers_precedence(monkeypatch: pytest.MonkeyPatch) -> None:
    """Explicit counts should win over the environment, which wins over 1."""
    assert resolve_workers() == 1

    monkeypatch.setenv(WORKERS_ENV_VAR, "3")
    assert resolve_workers() == 3
    assert resolve_workers(2) == 2


@pytest.mark.parametrize("raw", ("many", "0", "-2"))
def test_resolve_workers_rejects_bad_environment(
    monkeypatch: pytest.MonkeyPatch, raw: str
) -> None:
    """Non-integer or non-positive worker counts are configuration errors."""
    monkeypatch.setenv(WORKERS_ENV_VAR, raw)

    with pytest.raises(ConfigurationError):
        resolve_workers()


def test_map_ordered_keeps_input_order() -> None:
    """Results should come back in input order for any pool size."""
    assert map_ordered(abs, [-3, 1, -2, 4], workers=1) == [3, 1, 2, 4]
    assert map_ordered(abs, [-3, 1, -2, 4], workers=2) == [3, 1, 2, 4]
