"""Shared pytest fixtures for multilevel-pf test modules."""

from __future__ import annotations

import asyncio
from collections.abc import Callable, Iterator
from dataclasses import dataclass
from pathlib import Path
from typing import Any, TypeAlias

import numpy as np
import pytest

from multilevel_pf.apps import mcp as server
from multilevel_pf.datasets import simulate_dataset
from multilevel_pf.models import Observation, observations_from_values
from multilevel_pf.sde.base import DiffusionModel, FloatArray, ModelConstants, StateLike
from multilevel_pf.sde.ou import OrnsteinUhlenbeck, OUConstants
from multilevel_pf.workers import WORKERS_ENV_VAR

ToolGetter: TypeAlias = Callable[[str], Any]
ToolRunner: TypeAlias = Callable[
    [str, dict[str, object]],
    tuple[list[object], dict[str, object]],
]
TextFileWriter: TypeAlias = Callable[[str, str], Path]


# ---------------------------------------------------------------------------
# Test doubles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DriftlessConstants(ModelConstants):
    """Constants of a driftless Brownian test model."""

    delta: float = 0.5
    sigma: float = 0.7


class FlatBrownian(DiffusionModel[DriftlessConstants]):
    """Zero-drift, constant-noise model whose likelihood is constant."""

    name = "FLAT"
    constant_diffusion = True

    def _drift(self, x: FloatArray) -> FloatArray:
        """Return zeros."""
        return np.zeros_like(x)

    def _diffusion(self, x: FloatArray) -> FloatArray:
        """Return ``sigma``."""
        return np.full_like(x, self.constants.sigma)

    def _obs_logdensity(self, y: FloatArray, x: FloatArray) -> FloatArray:
        """Return ``log 2`` for every state."""
        return np.full(np.shape(x), np.log(2.0)) + 0.0 * y

    def _test_function(self, x: FloatArray) -> FloatArray:
        """Return ``x``."""
        return x

    def sample_observation(self, x: StateLike, rng: np.random.Generator) -> FloatArray:
        """Return the states unchanged."""
        return np.asarray(x, dtype=np.float64).copy()


class UnitPhiOU(OrnsteinUhlenbeck):
    """OU model whose test function is identically one."""

    def _test_function(self, x: FloatArray) -> FloatArray:
        """Return ones."""
        return np.ones_like(x)


class LinearPotential(FlatBrownian):
    """Model with potential ``G(y, x) = 1 + 2x`` for hand-checked weights."""

    name = "LINEAR"

    def _obs_logdensity(self, y: FloatArray, x: FloatArray) -> FloatArray:
        """Return ``log(1 + 2x)``."""
        return np.log1p(2.0 * x) + 0.0 * y


# ---------------------------------------------------------------------------
# Models and observations
# ---------------------------------------------------------------------------


@pytest.fixture(autouse=True)
def single_worker(monkeypatch: pytest.MonkeyPatch) -> None:
    """Keep every test in-process regardless of the caller's environment."""
    monkeypatch.delenv(WORKERS_ENV_VAR, raising=False)


@pytest.fixture
def ou_model() -> OrnsteinUhlenbeck:
    """Return the OU model with its published constants."""
    return OrnsteinUhlenbeck(OUConstants())


@pytest.fixture
def flat_model() -> FlatBrownian:
    """Return the driftless constant-likelihood model."""
    return FlatBrownian(DriftlessConstants())


@pytest.fixture
def unit_phi_model() -> UnitPhiOU:
    """Return an OU model with ``phi == 1``."""
    return UnitPhiOU(OUConstants())


@pytest.fixture
def linear_model() -> LinearPotential:
    """Return the model with potential ``1 + 2x``."""
    return LinearPotential(DriftlessConstants())


@pytest.fixture
def ou_observations(ou_model: OrnsteinUhlenbeck) -> tuple[Observation, ...]:
    """Return ten synthetic OU observations from a fixed seed."""
    return simulate_dataset(ou_model, 10, truth_level=6, seed=7).observations


@pytest.fixture
def zero_observations() -> tuple[Observation, ...]:
    """Return five observations equal to zero."""
    return observations_from_values([0.0] * 5)


# ---------------------------------------------------------------------------
# MCP and files
# ---------------------------------------------------------------------------


@pytest.fixture
def mcp_tool() -> ToolGetter:
    """Return an MCP tool by name and fail loudly if it is missing."""

    def _get(name: str) -> Any:
        tool = server.mcp_server._tool_manager.get_tool(name)
        assert tool is not None, f"missing MCP tool: {name}"
        return tool

    return _get


@pytest.fixture
def run_mcp_tool(mcp_tool: ToolGetter) -> ToolRunner:
    """Run an MCP tool and return its content plus structured payload."""

    def _run(
        name: str,
        arguments: dict[str, object],
    ) -> tuple[list[object], dict[str, object]]:
        tool = mcp_tool(name)
        content, structured = asyncio.run(tool.run(arguments, convert_result=True))
        assert isinstance(content, list)
        assert isinstance(structured, dict)
        return content, structured

    return _run


@pytest.fixture
def write_text_file(tmp_path: Path) -> TextFileWriter:
    """Write a UTF-8 text file below ``tmp_path`` and return its path."""

    def _write(relative_path: str, content: str) -> Path:
        path = tmp_path / relative_path
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(content, encoding="utf-8")
        return path

    return _write


@pytest.fixture
def chdir_tmp(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Iterator[Path]:
    """Run the test from inside ``tmp_path``."""
    monkeypatch.chdir(tmp_path)
    yield tmp_path
