"""MCP server exposing particle filters and reference values as tools."""

import argparse
from typing import Any

from mcp.server.fastmcp import FastMCP
from mcp.server.fastmcp.exceptions import ToolError

from multilevel_pf import oracle
from multilevel_pf.allocation import level_allocation, predicted_cost_rate
from multilevel_pf.datasets import simulate_dataset
from multilevel_pf.errors import MultilevelPFError
from multilevel_pf.experiment import cost_model, pf_particles
from multilevel_pf.mlpf import FILTER_STREAM, mlpf_run
from multilevel_pf.models import (
    AllocationPayload,
    FilterSummaryPayload,
    MultilevelSummaryPayload,
    Observation,
    ReferencePayload,
    observations_from_values,
)
from multilevel_pf.particle_filter import pf_run
from multilevel_pf.rng import StreamFactory
from multilevel_pf.sde.base import DiffusionModel
from multilevel_pf.sde.registry import builtin_model
from multilevel_pf.version import PACKAGE_VERSION

MCP_SERVER_NAME = "multilevel-pf"
mcp_server = FastMCP(MCP_SERVER_NAME)


def _model(name: str, constants: dict[str, float] | None) -> DiffusionModel[Any]:
    """Build a built-in model and convert config errors into tool errors."""
    try:
        return builtin_model(name, constants or {})
    except MultilevelPFError as exc:
        raise ToolError(str(exc)) from exc


def _observations(
    model: DiffusionModel[Any], values: list[float] | None, steps: int, seed: int
) -> tuple[Observation, ...]:
    """Number given observation values, or simulate ``steps`` of them."""
    if values is None:
        if steps < 1:
            raise ToolError("Steps must be positive.")
        return simulate_dataset(model, steps, seed=seed).observations
    if not values:
        raise ToolError("Observations must not be empty.")
    return observations_from_values(values)


@mcp_server.tool()
def run_filter(
    model: str,
    observations: list[float] | None = None,
    steps: int = 50,
    level: int = 4,
    particles: int | None = None,
    seed: int = 0,
    constants: dict[str, float] | None = None,
) -> FilterSummaryPayload:
    """Run a single-level particle filter.

    ``model`` is one of OU, GBM, LANGEVIN, NLM. Without ``observations`` the
    tool simulates ``steps`` synthetic ones from ``seed``. Particles default
    to ``4^level``. Returns the final filter estimate of the model's test
    function, the log normalizing constant, and the Euler-step cost.
    """
    diffusion_model = _model(model, constants)
    try:
        output = pf_run(
            diffusion_model,
            _observations(diffusion_model, observations, steps, seed),
            level,
            particles or pf_particles(level),
            StreamFactory(seed).generator(level, FILTER_STREAM),
        )
    except MultilevelPFError as exc:
        raise ToolError(str(exc)) from exc
    return output.to_payload(diffusion_model.name)


@mcp_server.tool()
def run_multilevel_filter(
    model: str,
    observations: list[float] | None = None,
    steps: int = 50,
    max_level: int = 3,
    base_particles: int | None = None,
    seed: int = 0,
    constants: dict[str, float] | None = None,
) -> MultilevelSummaryPayload:
    """Run the multilevel particle filter.

    Without ``observations`` the tool simulates ``steps`` synthetic ones.
    Without ``base_particles`` the standard per-level allocation is used.
    Returns the per-step estimates and per-level increments and coupling.
    """
    diffusion_model = _model(model, constants)
    try:
        if base_particles is None:
            allocation = level_allocation(max_level, diffusion_model)
        else:
            allocation = level_allocation(
                max_level, diffusion_model, "explicit", base_particles=base_particles
            )
        output = mlpf_run(
            diffusion_model,
            _observations(diffusion_model, observations, steps, seed),
            allocation,
            StreamFactory(seed),
            workers=1,
        )
    except MultilevelPFError as exc:
        raise ToolError(str(exc)) from exc
    return output.to_payload(diffusion_model.name)


@mcp_server.tool()
def kalman_reference(
    model: str,
    observations: list[float] | None = None,
    steps: int = 50,
    seed: int = 0,
    constants: dict[str, float] | None = None,
) -> ReferencePayload:
    """Compute the exact filter means for OU or GBM observations."""
    diffusion_model = _model(model, constants)
    if not oracle.has_exact_filter(diffusion_model):
        raise ToolError(f"No exact filter for model {diffusion_model.name}.")
    try:
        reference = oracle.kalman_reference(
            diffusion_model, _observations(diffusion_model, observations, steps, seed)
        )
    except MultilevelPFError as exc:
        raise ToolError(str(exc)) from exc
    return reference.to_payload(diffusion_model.name)


@mcp_server.tool()
def allocation_table(
    model: str,
    max_level: int,
    steps: int = 1,
    constants: dict[str, float] | None = None,
) -> AllocationPayload:
    """Return the standard per-level particle counts and predicted cost rate."""
    diffusion_model = _model(model, constants)
    if steps < 1:
        raise ToolError("Steps must be positive.")
    try:
        allocation = level_allocation(max_level, diffusion_model)
    except MultilevelPFError as exc:
        raise ToolError(str(exc)) from exc
    return {
        "model": diffusion_model.name,
        "max_level": allocation.max_level,
        "variant": allocation.variant,
        "beta": allocation.beta,
        "gamma": allocation.gamma,
        "particles": list(allocation.particles),
        "step_sizes": list(allocation.step_sizes),
        "cost_per_observation": cost_model(allocation, steps) // steps,
        "predicted_cost_rate": predicted_cost_rate(
            "MLPF", allocation.beta, allocation.gamma, allocation.alpha
        ),
    }


def _build_parser() -> argparse.ArgumentParser:
    """Construct the MCP server CLI parser."""
    parser = argparse.ArgumentParser(
        prog="mlpf-mcp",
        description="Run the multilevel-pf MCP server on stdio.",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=PACKAGE_VERSION,
        help="Show package version and exit.",
    )
    return parser


def main(argv: list[str] | None = None) -> None:
    """Run the multilevel-pf MCP server on stdio."""
    parser = _build_parser()
    parser.parse_args(argv)
    mcp_server.run()
