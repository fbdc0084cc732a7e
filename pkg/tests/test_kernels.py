"""Tests for Euler steps and the single and coupled transition kernels."""

from __future__ import annotations

import math

import numpy as np
import pytest

from multilevel_pf.errors import ContractError, PropagationError
from multilevel_pf.kernels import (
    LevelIndex,
    euler_step,
    simulate_coupled_transition,
    simulate_transition,
)
from multilevel_pf.sde import builtin_model


class CountingGenerator:
    """Generator wrapper that counts standard normal draws."""

    def __init__(self, seed: int) -> None:
        """Wrap a seeded PCG64 generator."""
        self._rng = np.random.default_rng(seed)
        self.draws = 0

    def standard_normal(self, shape: tuple[int, ...]) -> np.ndarray:
        """Return draws and count them."""
        values = self._rng.standard_normal(shape)
        self.draws += values.size
        return values


class FixedGenerator:
    """Generator stand-in returning ones for every normal draw."""

    def standard_normal(self, shape: tuple[int, ...]) -> np.ndarray:
        """Return ones."""
        return np.ones(shape)


def test_level_index_counts_steps() -> None:
    """Level metadata should follow ``k_l = 2^l`` and ``h_l = delta 2^-l``."""
    level = LevelIndex(3)

    assert level.steps == 8
    assert level.coupled_steps == 12
    assert level.step_size(0.5) == 0.0625
    assert LevelIndex(0).coupled_steps == 1


def test_negative_level_is_rejected() -> None:
    """Levels below zero violate the level contract."""
    with pytest.raises(ContractError, match="non-negative"):
        LevelIndex(-1)


@pytest.mark.parametrize(
    ("x", "xi", "expected"),
    (
        (0.0, 0.0, 0.0),
        (0.0, 1.0, math.sqrt(0.5) * 0.5),
        (1.0, 0.0, 0.5),
    ),
)
def test_euler_step_matches_hand_arithmetic(ou_model, x: float, xi: float, expected: float) -> None:
    """One OU Euler step of size 0.5 should match hand arithmetic."""
    assert float(euler_step(ou_model, x, 0.5, xi)) == pytest.approx(expected)


def test_euler_step_rejects_non_positive_step(ou_model) -> None:
    """Zero step sizes violate the step contract."""
    with pytest.raises(ContractError, match="step size"):
        euler_step(ou_model, 0.0, 0.0, 0.0)


def test_euler_step_reports_overflow_with_step_index() -> None:
    """A state that overflows should raise a propagation error naming the step."""
    model = builtin_model("OU", {"theta": -1e300})

    with pytest.raises(PropagationError, match="Euler step 4") as raised:
        euler_step(model, np.array([1e300]), 1.0, 0.0, step=4)

    assert raised.value.step == 4


def test_level_zero_transition_takes_one_step(ou_model) -> None:
    """At level 0 the kernel should consume one draw per particle."""
    rng = CountingGenerator(1)

    simulate_transition(ou_model, np.zeros(5), 0, rng)

    assert rng.draws == 5


def test_transition_consumes_k_l_draws(ou_model) -> None:
    """A level-``l`` transition should consume ``2^l`` draws per particle."""
    rng = CountingGenerator(1)

    simulate_transition(ou_model, np.zeros(3), 4, rng)

    assert rng.draws == 3 * 16


def test_transition_is_reproducible(ou_model) -> None:
    """Two runs from the same seed should be bit-identical."""
    first = simulate_transition(ou_model, np.zeros(20), 3, np.random.default_rng(9))
    second = simulate_transition(ou_model, np.zeros(20), 3, np.random.default_rng(9))

    np.testing.assert_array_equal(first, second)


def test_deterministic_flow_converges_to_ode_solution() -> None:
    """With ``sigma = 0`` the OU kernel should approach ``x0 e^(-delta)``."""
    model = builtin_model("OU", {"sigma": 0.0})

    moved = simulate_transition(model, np.array([1.0]), 10, np.random.default_rng(0))

    assert abs(float(moved[0]) - math.exp(-0.5)) < 1e-3


def test_coupled_transition_rejects_level_zero(ou_model) -> None:
    """Level 0 has no coarse partner."""
    with pytest.raises(ContractError, match="level >= 1"):
        simulate_coupled_transition(ou_model, np.zeros(2), np.zeros(2), 0, np.random.default_rng(0))


def test_coupled_transition_rejects_shape_mismatch(ou_model) -> None:
    """Fine and coarse states must pair up one to one."""
    with pytest.raises(ContractError, match="differ in shape"):
        simulate_coupled_transition(ou_model, np.zeros(2), np.zeros(3), 1, np.random.default_rng(0))


def test_driftless_coupled_paths_coincide(flat_model) -> None:
    """Zero drift and constant noise should give identical fine and coarse paths."""
    start = np.linspace(-1.0, 1.0, 11)

    fine, coarse = simulate_coupled_transition(
        flat_model, start, start.copy(), 5, np.random.default_rng(3)
    )

    np.testing.assert_array_equal(fine, coarse)


def test_coupled_level_one_step_matches_hand_arithmetic(ou_model) -> None:
    """With unit draws, level 1 should match two fine and one coarse Euler step."""
    fine, coarse = simulate_coupled_transition(
        ou_model, np.zeros(1), np.zeros(1), 1, FixedGenerator()
    )

    h = 0.25
    noise = math.sqrt(h) * 0.5
    first = noise
    expected_fine = first + h * (-first) + noise
    expected_coarse = 2.0 * noise
    assert float(fine[0]) == pytest.approx(expected_fine, abs=1e-6)
    assert float(coarse[0]) == pytest.approx(expected_coarse, abs=1e-6)


def test_coupled_transition_consumes_only_fine_draws(ou_model) -> None:
    """The coarse chain should not draw noise of its own."""
    rng = CountingGenerator(2)

    simulate_coupled_transition(ou_model, np.zeros(4), np.zeros(4), 3, rng)

    assert rng.draws == 4 * 8


def test_coarse_marginal_matches_lower_level_kernel(ou_model) -> None:
    """Coarse outputs should share the law of an independent level ``l - 1`` run."""
    count = 100_000
    start = np.zeros(count)
    _, coarse = simulate_coupled_transition(
        ou_model, start, start.copy(), 3, np.random.default_rng(11)
    )
    reference = simulate_transition(ou_model, start, 2, np.random.default_rng(12))

    stderr = math.sqrt(np.var(coarse) / count + np.var(reference) / count)
    assert abs(coarse.mean() - reference.mean()) < 3.0 * stderr
    variance_stderr = np.var(reference) * math.sqrt(2.0 / count) * math.sqrt(2.0)
    assert abs(np.var(coarse) - np.var(reference)) < 3.0 * variance_stderr


def test_strong_error_shrinks_with_level(ou_model) -> None:
    """The fine/coarse mean-square gap should fall as the level rises."""
    start = np.zeros(20_000)
    gaps = []
    for level in (1, 3, 5):
        fine, coarse = simulate_coupled_transition(
            ou_model, start, start.copy(), level, np.random.default_rng(level)
        )
        gaps.append(float(np.mean((fine - coarse) ** 2)))

    assert gaps[0] > gaps[1] > gaps[2]
