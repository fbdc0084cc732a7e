"""Tests for per-level particle allocation and predicted cost rates."""

from __future__ import annotations

import pytest

from multilevel_pf.allocation import (
    LevelAllocation,
    complexity_case,
    level_allocation,
    predicted_cost_rate,
)
from multilevel_pf.errors import ConfigurationError, ContractError
from multilevel_pf.sde import builtin_model


def test_constant_diffusion_standard_allocation() -> None:
    """Constant diffusion at ``L = 4`` should halve from 1024 particles."""
    allocation = level_allocation(4, builtin_model("OU"))

    assert allocation.particles == (1024, 512, 256, 128, 64)
    assert allocation.variant == "constant_diffusion"
    assert allocation.beta == 2.0
    assert allocation.case == "beta_eq_2gamma"


def test_general_standard_allocation() -> None:
    """General diffusion at ``L = 2`` should floor ``2^4.5 2^(-0.75 l)``."""
    allocation = level_allocation(2, builtin_model("NLM"))

    assert allocation.particles == (22, 13, 8)
    assert allocation.variant == "general"
    assert allocation.case == "beta_lt_2gamma"


def test_smallest_allocation_keeps_floor() -> None:
    """``L = 1`` with constant diffusion should give ``(4, 2)``."""
    assert level_allocation(1, builtin_model("LANGEVIN")).particles == (4, 2)


def test_explicit_allocation_scales_base_count() -> None:
    """Explicit mode should decay a caller-chosen base count."""
    allocation = level_allocation(3, builtin_model("OU"), "explicit", base_particles=80)

    assert allocation.particles == (80, 40, 20, 10)


def test_explicit_allocation_floors_at_two() -> None:
    """Deep levels should never drop below two particles."""
    allocation = level_allocation(5, builtin_model("OU"), "explicit", base_particles=4)

    assert allocation.particles == (4, 2, 2, 2, 2, 2)


def test_step_sizes_follow_observation_interval() -> None:
    """Step sizes should be ``delta 2^-l``."""
    allocation = level_allocation(2, builtin_model("OU"))

    assert allocation.step_sizes == (0.5, 0.25, 0.125)


@pytest.mark.parametrize("max_level", (0, -3))
def test_level_below_one_is_rejected(max_level: int) -> None:
    """Allocations need at least one coupled level."""
    with pytest.raises(ConfigurationError, match="at least 1"):
        level_allocation(max_level, builtin_model("OU"))


def test_explicit_mode_needs_base_particles() -> None:
    """Explicit mode without a base count is a configuration error."""
    with pytest.raises(ConfigurationError, match="base_particles"):
        level_allocation(2, builtin_model("OU"), "explicit")


def test_allocation_validates_counts() -> None:
    """Hand-built allocations must be non-increasing with the floor respected."""
    with pytest.raises(ContractError, match="non-increasing"):
        LevelAllocation(max_level=1, particles=(4, 8), beta=2.0)
    with pytest.raises(ContractError, match="at least 2"):
        LevelAllocation(max_level=1, particles=(4, 1), beta=2.0)
    with pytest.raises(ContractError, match="expected 3"):
        LevelAllocation(max_level=2, particles=(4, 2), beta=2.0)


@pytest.mark.parametrize(
    ("beta", "expected"),
    (
        (3.0, "beta_gt_2gamma"),
        (2.0, "beta_eq_2gamma"),
        (1.0, "beta_lt_2gamma"),
    ),
)
def test_complexity_cases(beta: float, expected: str) -> None:
    """Cases should compare ``beta`` with ``2 gamma``."""
    assert complexity_case(beta) == expected


def test_predicted_cost_rates() -> None:
    """Predicted slopes should follow the single-level and multilevel cases."""
    assert predicted_cost_rate("PF", 2.0) == -1.5
    assert predicted_cost_rate("MLPF", 2.0) == -1.0
    assert predicted_cost_rate("MLPF", 3.0) == -1.0
    assert predicted_cost_rate("MLPF", 1.0) == -1.25
