"""Tests for the Kalman oracles, the reference filter, and reference files."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from multilevel_pf.errors import ContractError, IngestionError
from multilevel_pf.models import ReferenceValues, observations_from_values
from multilevel_pf.oracle import (
    has_exact_filter,
    kalman_gbm,
    kalman_ou,
    kalman_reference,
    ou_transition,
    read_reference_csv,
    reference_pf,
    write_reference_csv,
)
from multilevel_pf.sde import builtin_model


def test_ou_transition_coefficients(ou_model) -> None:
    """Exact OU coefficients should match ``e^(-theta delta)`` and its variance."""
    coefficient, variance = ou_transition(ou_model)

    assert coefficient == pytest.approx(math.exp(-0.5))
    assert variance == pytest.approx(0.25 * (1.0 - math.exp(-1.0)) / 2.0)


def test_ou_transition_without_mean_reversion() -> None:
    """With ``theta = 0`` the transition variance should be ``sigma^2 delta``."""
    coefficient, variance = ou_transition(builtin_model("OU", {"theta": 0.0}))

    assert coefficient == 1.0
    assert variance == pytest.approx(0.125)


def test_uninformative_observation_keeps_prior_mean() -> None:
    """A huge observation variance should leave the mean at its prior."""
    model = builtin_model("OU", {"tau2": 1e12})

    output = kalman_ou(model, observations_from_values([5.0]))

    assert output.estimates[0] == pytest.approx(0.0, abs=1e-9)


def test_ou_posterior_variance_converges(ou_model) -> None:
    """The Riccati recursion should settle to a fixed variance."""
    observations = observations_from_values(np.zeros(120))

    output = kalman_ou(ou_model, observations)

    assert abs(output.variances[-1] - output.variances[-20]) < 1e-10
    assert np.all(output.variances > 0.0)


def test_gbm_log_drift_cancels_for_default_constants() -> None:
    """With ``mu = sigma^2 / 2`` the predicted log-mean should stay at zero."""
    model = builtin_model("GBM")

    output = kalman_gbm(model, observations_from_values([0.0, 0.0]))

    assert output.predictor_means[0] == pytest.approx(0.0, abs=1e-15)


def test_gbm_near_noise_free_observation_pins_log_state() -> None:
    """As ``tau2`` vanishes the posterior log-mean should equal the observation."""
    model = builtin_model("GBM", {"tau2": 1e-20})

    output = kalman_gbm(model, observations_from_values([0.01, -0.02]))

    np.testing.assert_allclose(output.means, [0.01, -0.02], atol=1e-12)
    np.testing.assert_allclose(output.estimates, np.exp([0.01, -0.02]), rtol=1e-10)


def test_gbm_estimates_use_lognormal_mean() -> None:
    """``E[X]`` should be ``exp(mean + variance / 2)`` of the log state."""
    output = kalman_gbm(builtin_model("GBM"), observations_from_values([0.003, 0.001]))

    np.testing.assert_allclose(
        output.estimates, np.exp(output.means + 0.5 * output.variances)
    )


def test_oracles_reject_the_wrong_model(ou_model) -> None:
    """Each Kalman oracle should refuse the other model families."""
    observations = observations_from_values([0.0])

    with pytest.raises(ContractError, match="GBM"):
        kalman_gbm(ou_model, observations)
    with pytest.raises(ContractError, match="OU"):
        kalman_ou(builtin_model("NLM"), observations)
    with pytest.raises(ContractError, match="no exact filter"):
        kalman_reference(builtin_model("LANGEVIN"), observations)


def test_has_exact_filter_covers_linear_gaussian_models() -> None:
    """OU and GBM have exact filters; NLM and Langevin do not."""
    assert has_exact_filter(builtin_model("OU"))
    assert has_exact_filter(builtin_model("GBM"))
    assert not has_exact_filter(builtin_model("NLM"))
    assert not has_exact_filter(builtin_model("LANGEVIN"))


def test_kalman_reference_has_zero_error(ou_model, ou_observations) -> None:
    """Exact reference values should carry zero standard error."""
    reference = kalman_reference(ou_model, ou_observations)

    assert reference.source == "kalman"
    assert reference.steps == 10
    assert np.all(reference.stderr == 0.0)


def test_reference_filter_agrees_with_kalman(ou_model, ou_observations) -> None:
    """A small reference filter should sit within a few errors of the exact filter."""
    reference = reference_pf(ou_model, ou_observations, level=5, particles=2000, seeds=4)
    exact = kalman_ou(ou_model, ou_observations)

    tolerance = 5.0 * reference.stderr + 0.01
    assert np.all(np.abs(reference.values - exact.estimates) < tolerance)


def test_reference_filter_is_deterministic(ou_model, ou_observations) -> None:
    """The same seed should reproduce the reference bit for bit."""
    first = reference_pf(ou_model, ou_observations, level=2, particles=200, seed=4, seeds=3)
    second = reference_pf(ou_model, ou_observations, level=2, particles=200, seed=4, seeds=3)

    np.testing.assert_array_equal(first.values, second.values)
    np.testing.assert_array_equal(first.stderr, second.stderr)


def test_reference_filter_error_shrinks_with_particles(ou_model, ou_observations) -> None:
    """Ten times the particles should cut the reported error by about sqrt(10)."""
    small = reference_pf(ou_model, ou_observations, level=2, particles=100, seed=5, seeds=20)
    large = reference_pf(ou_model, ou_observations, level=2, particles=1000, seed=5, seeds=20)

    ratio = math.sqrt(np.mean(small.stderr**2) / np.mean(large.stderr**2))
    assert math.sqrt(10.0) / 1.6 < ratio < math.sqrt(10.0) * 1.6


def test_reference_filter_needs_two_seeds(ou_model, ou_observations) -> None:
    """A single seed cannot give a standard error."""
    with pytest.raises(ContractError, match="at least 2 seeds"):
        reference_pf(ou_model, ou_observations, level=1, particles=10, seeds=1)


def test_reference_csv_round_trip(tmp_path: Path) -> None:
    """Written reference files should read back with the same values."""
    reference = ReferenceValues(
        values=np.array([0.1, -0.25, 0.5]), stderr=np.array([0.0, 0.01, 0.02])
    )

    path = write_reference_csv(tmp_path / "nested" / "reference.csv", reference)
    loaded = read_reference_csv(path)

    np.testing.assert_array_equal(loaded.values, reference.values)
    np.testing.assert_array_equal(loaded.stderr, reference.stderr)
    assert loaded.source == "file"


def test_reference_csv_rejects_missing_columns(write_text_file) -> None:
    """Files without the reference columns should fail ingestion."""
    path = write_text_file("bad.csv", "step,value\n1,0.5\n")

    with pytest.raises(IngestionError, match="stderr"):
        read_reference_csv(path)


def test_reference_csv_rejects_gapped_steps(write_text_file) -> None:
    """Steps must run ``1..n`` without gaps."""
    path = write_text_file("gap.csv", "step,value,stderr\n1,0.5,0\n3,0.2,0\n")

    with pytest.raises(IngestionError, match="1..n"):
        read_reference_csv(path)


def test_reference_values_require_matching_lengths() -> None:
    """Values and errors must have the same length."""
    with pytest.raises(ContractError):
        ReferenceValues(values=np.zeros(3), stderr=np.zeros(2))
