"""Tests for built-in diffusion models, constants, and the model registry."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate

from multilevel_pf.errors import ConfigurationError, DomainError
from multilevel_pf.sde import (
    GeometricBrownianMotion,
    NonLinearDiffusion,
    OrnsteinUhlenbeck,
    StudentTLangevin,
    builtin_model,
    builtin_names,
    diffusion,
    drift,
    obs_logdensity,
    resolve_model_type,
)
from multilevel_pf.sde.gbm import GBMConstants
from multilevel_pf.sde.langevin import LangevinConstants
from multilevel_pf.sde.nlm import NLMConstants
from multilevel_pf.sde.ou import OUConstants


@pytest.mark.parametrize(
    ("model", "x", "expected"),
    (
        (OrnsteinUhlenbeck(OUConstants()), 0.0, 0.0),
        (OrnsteinUhlenbeck(OUConstants()), 2.0, -2.0),
        (StudentTLangevin(LangevinConstants()), 0.0, 0.0),
        (StudentTLangevin(LangevinConstants()), 1.0, -0.5),
    ),
)
def test_drift_matches_hand_values(model, x: float, expected: float) -> None:
    """Drift values should match the closed-form coefficients."""
    assert drift(model, x) == pytest.approx(expected)


@pytest.mark.parametrize(
    ("model", "x", "expected"),
    (
        (OrnsteinUhlenbeck(OUConstants()), 3.0, 0.5),
        (NonLinearDiffusion(NLMConstants()), 0.0, 1.0),
        (NonLinearDiffusion(NLMConstants()), math.sqrt(3.0), 0.5),
    ),
)
def test_diffusion_matches_hand_values(model, x: float, expected: float) -> None:
    """Diffusion values should match the closed-form coefficients."""
    assert diffusion(model, x) == pytest.approx(expected)


def test_coefficients_are_vectorized(ou_model) -> None:
    """Coefficient functions should keep the particle-array shape."""
    states = np.linspace(-1.0, 1.0, 7)

    assert ou_model.drift(states).shape == (7,)
    assert ou_model.diffusion(states).shape == (7,)
    assert ou_model.obs_logdensity(0.1, states).shape == (7,)


def test_non_finite_state_is_a_domain_error(ou_model) -> None:
    """Drift and density should refuse non-finite states."""
    with pytest.raises(DomainError, match="finite"):
        ou_model.drift(np.array([0.0, np.nan]))
    with pytest.raises(DomainError):
        ou_model.obs_logdensity(0.0, np.inf)


def test_ou_density_peaks_at_state(ou_model) -> None:
    """The OU log density at ``y = x`` should equal the Gaussian mode value."""
    value = obs_logdensity(ou_model, 0.3, 0.3)

    assert value == pytest.approx(-0.5 * math.log(2.0 * math.pi * 0.2))


def test_nlm_density_is_laplace_mode() -> None:
    """The NLM log density at ``y = x`` should be ``-ln(2 s)``."""
    model = NonLinearDiffusion(NLMConstants())

    assert model.obs_logdensity(1.5, 1.5) == pytest.approx(-math.log(2.0 * math.sqrt(0.1)))


def test_langevin_density_uses_state_dependent_variance() -> None:
    """Langevin returns should be Gaussian with variance ``tau2 exp(x)``."""
    model = StudentTLangevin(LangevinConstants())

    expected = -0.5 * math.log(2.0 * math.pi) - 0.125
    assert model.obs_logdensity(0.5, 0.0) == pytest.approx(expected)


def test_langevin_test_function_caps_exponent() -> None:
    """``phi`` should stay finite above the exponent cap and count capped states."""
    model = StudentTLangevin(LangevinConstants())
    states = np.array([0.0, 800.0])

    values = model.test_function(states)

    assert values[0] == pytest.approx(1.0)
    assert np.isfinite(values[1])
    assert model.count_capped(states) == 1


def test_gbm_density_clamps_non_positive_states() -> None:
    """GBM densities should stay finite for states at or below zero."""
    model = GeometricBrownianMotion(GBMConstants())
    states = np.array([-0.5, 0.0, 1.0])

    values = model.obs_logdensity(0.0, states)

    assert np.all(np.isfinite(values))
    assert model.count_clamped(states) == 2


def test_builtin_defaults_match_published_constants() -> None:
    """Built-in models should carry their published constants."""
    ou = builtin_model("OU")
    gbm = builtin_model("gbm")

    assert ou.constants.tau2 == 0.2
    assert ou.obs_interval == 0.5
    assert gbm.constants.tau2 == 0.01
    assert gbm.obs_interval == 0.001


def test_override_changes_only_named_constant() -> None:
    """An override should replace one constant and keep the rest."""
    default = builtin_model("OU")
    changed = builtin_model("OU", {"sigma": 1.0})

    assert changed.constants.sigma == 1.0
    assert changed.constants.theta == default.constants.theta
    assert changed.constants.tau2 == default.constants.tau2
    assert changed != default


def test_unknown_model_name_lists_known_models() -> None:
    """Unknown model names should fail with the builtin list."""
    with pytest.raises(ConfigurationError, match="Known models: OU, GBM, LANGEVIN, NLM"):
        builtin_model("heston")


def test_unknown_constant_is_rejected() -> None:
    """Overrides must name constants the model defines."""
    with pytest.raises(ConfigurationError, match="unknown constant 'nu'"):
        builtin_model("OU", {"nu": 3.0})


@pytest.mark.parametrize(
    ("name", "overrides"),
    (
        ("OU", {"delta": 0.0}),
        ("OU", {"tau2": -1.0}),
        ("OU", {"tau2": 0.0}),
        ("GBM", {"tau2": 0.0}),
        ("LANGEVIN", {"tau2": 0.0}),
        ("GBM", {"x0": 0.0}),
        ("NLM", {"s": 0.0}),
        ("LANGEVIN", {"nu": -2.0}),
    ),
)
def test_out_of_range_constants_are_configuration_errors(
    name: str, overrides: dict[str, float]
) -> None:
    """Constant ranges should be validated when the model is built."""
    with pytest.raises(ConfigurationError):
        builtin_model(name, overrides)


def test_registry_resolves_names_case_insensitively() -> None:
    """Registry lookups should ignore case and surrounding whitespace."""
    assert builtin_names() == ("OU", "GBM", "LANGEVIN", "NLM")
    assert resolve_model_type(" nlm ") is NonLinearDiffusion


def test_sample_observation_with_vanishing_noise_returns_state() -> None:
    """As ``tau2`` vanishes an OU observation equals its latent state."""
    model = builtin_model("OU", {"tau2": 1e-30})
    states = np.array([0.25, -1.0])

    observed = model.sample_observation(states, np.random.default_rng(0))

    np.testing.assert_allclose(observed, states, rtol=0.0, atol=1e-13)


def test_models_round_trip_through_dicts(ou_model) -> None:
    """``to_dict``/``from_dict`` should rebuild an equal model."""
    rebuilt = OrnsteinUhlenbeck.from_dict(ou_model.to_dict())

    assert rebuilt == ou_model
    assert hash(rebuilt) == hash(ou_model)


_DENSITY_WINDOWS = {
    "OU": (lambda x: x, 10.0),
    "GBM": (lambda x: math.log(x), 2.0),
    "NLM": (lambda x: x, 10.0),
    "LANGEVIN": (lambda x: 0.0, 40.0),
}


def _states(name: str, count: int, seed: int) -> np.ndarray:
    """Draw valid states for ``name``: positive for GBM, anywhere else."""
    rng = np.random.default_rng(seed)
    if name == "GBM":
        return rng.uniform(0.2, 5.0, size=count)
    return rng.uniform(-2.0, 2.0, size=count)


@pytest.mark.parametrize("name", ("OU", "GBM", "NLM", "LANGEVIN"))
def test_observation_density_integrates_to_one(name: str) -> None:
    """Each observation density should integrate to one over ``y`` for fixed states."""
    model = builtin_model(name)
    center_of, half_width = _DENSITY_WINDOWS[name]

    for x in _states(name, 5, seed=11):
        center = center_of(float(x))

        def density(y: float, state: float = float(x)) -> float:
            return float(np.exp(model.obs_logdensity(y, np.array([state]))[0]))

        total, _ = integrate.quad(
            density,
            center - half_width,
            center + half_width,
            points=[center],
            limit=400,
            epsabs=1e-10,
        )
        assert total == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("name", ("OU", "GBM", "NLM", "LANGEVIN"))
def test_constant_diffusion_flag_matches_coefficient(name: str) -> None:
    """The flag should hold exactly when the diffusion is constant at random states."""
    model = builtin_model(name)

    values = diffusion(model, _states(name, 100, seed=12))

    if model.constant_diffusion:
        assert np.all(values == values[0])
    else:
        assert np.ptp(values) > 0.0


def test_nlm_diffusion_stays_within_sigma() -> None:
    """The damped NLM noise scale should lie in ``(0, sigma]`` at any finite state."""
    model = builtin_model("NLM")
    states = np.concatenate(
        [np.random.default_rng(13).normal(scale=100.0, size=100), [0.0, -1e100, 1e100]]
    )

    values = diffusion(model, states)

    assert np.all(values > 0.0)
    assert np.all(values <= model.constants.sigma)
    assert values[100] == model.constants.sigma
