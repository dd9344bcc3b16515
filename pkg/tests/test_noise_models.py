import math

import numpy as np
import pytest

from oie.errors import DomainError, FitError
from oie.schemas import HapticRegression, VisualRegression
from oie.services.noise_models import (
    HAPTIC_LEVELS_NM,
    IDENTIFIED_SIGMA_H,
    fit_haptic_regression,
    fit_visual_regression,
    haptic_effective,
    sigma_kappa,
    sigma_kappa_derivative,
    sigma_t_squared,
    identified_haptic_points,
    identified_visual_points,
    visual_effective,
    visual_residual,
)


# --- Compliance noise ---
def test_sigma_kappa_values():
    assert sigma_kappa(0.0) == pytest.approx(5.18 + 49.65)
    assert sigma_kappa(0.5) == pytest.approx(7.5195, abs=1e-3)
    assert sigma_kappa(50.0) == pytest.approx(5.18, abs=1e-9)


def test_sigma_kappa_strictly_decreasing():
    u = np.linspace(0.0, 1.5, 200)
    assert np.all(np.diff(sigma_kappa(u)) < 0)
    assert np.all(sigma_kappa_derivative(u) < 0)


@pytest.mark.parametrize("u", [round(0.05 * i, 2) for i in range(31)])
def test_sigma_kappa_derivative_matches_finite_difference(u):
    h = 1e-5
    if u > 0:
        numeric = (sigma_kappa(u + h) - sigma_kappa(u - h)) / (2 * h)
    else:
        numeric = (-3 * sigma_kappa(0.0) + 4 * sigma_kappa(h) - sigma_kappa(2 * h)) / (2 * h)
    assert numeric == pytest.approx(sigma_kappa_derivative(u), rel=1e-6)


def test_sigma_t_squared_adds_variances():
    assert sigma_t_squared(0.5, 30.0) == pytest.approx(900.0 + sigma_kappa(0.5) ** 2)
    assert math.isinf(sigma_t_squared(0.5, math.inf))


@pytest.mark.parametrize("fn, arg", [(sigma_kappa, -0.1), (visual_effective, -1.0), (haptic_effective, -0.01)])
def test_negative_inputs_rejected(fn, arg):
    with pytest.raises(DomainError):
        fn(arg)


def test_nan_rejected():
    with pytest.raises(DomainError):
        sigma_kappa(float("nan"))


# --- Regressions ---
def test_haptic_regression_reproduces_identified_values():
    got = haptic_effective(np.array(HAPTIC_LEVELS_NM))
    np.testing.assert_allclose(got, IDENTIFIED_SIGMA_H, atol=0.02)


def test_haptic_refit_close_to_reference_coefficients():
    reg = fit_haptic_regression(identified_haptic_points())
    reference = HapticRegression()
    assert reg.alpha_p == pytest.approx(reference.alpha_p, rel=0.05)
    assert reg.beta_p == pytest.approx(reference.beta_p, rel=0.05)
    assert reg.delta_p == pytest.approx(reference.delta_p, rel=0.05)
    # three points, three coefficients: interpolation
    np.testing.assert_allclose(haptic_effective(np.array(HAPTIC_LEVELS_NM), reg), IDENTIFIED_SIGMA_H, atol=1e-9)


def test_haptic_linear_fit_needs_two_points():
    reg = fit_haptic_regression([(0.0, 5.0), (0.1, 6.0)], quadratic=False)
    assert reg.delta_p == 0.0
    assert reg.beta_p == pytest.approx(10.0)
    with pytest.raises(FitError):
        fit_haptic_regression([(0.0, 5.0), (0.1, 6.0)])


def test_visual_fit_beats_default_coefficients():
    points = identified_visual_points()
    reg = fit_visual_regression(points)
    assert reg.alpha_v == pytest.approx(-3.2, abs=1e-6)
    assert reg.beta_v == pytest.approx(67.68, abs=1e-6)
    assert visual_residual(points, reg) == pytest.approx(1.3448, abs=1e-4)
    assert visual_residual(points, VisualRegression()) == pytest.approx(3.3626, abs=1e-3)


def test_visual_fit_with_fixed_slope():
    reg = fit_visual_regression(identified_visual_points(), beta_fixed=66.18)
    assert reg.beta_v == 66.18
    # mean residual is zero for the least-squares offset
    residuals = [visual_effective(c, reg) - v for c, v in identified_visual_points()]
    assert sum(residuals) == pytest.approx(0.0, abs=1e-9)


def test_visual_fit_rank_deficient():
    with pytest.raises(FitError):
        fit_visual_regression([(10.0, 30.0), (10.0, 31.0)])


def test_visual_effective_sigmoid_limits():
    reg = VisualRegression()
    assert visual_effective(0.0) == pytest.approx(reg.alpha_v + reg.beta_v / 2)
    assert visual_effective(100.0) == pytest.approx(reg.alpha_v + reg.beta_v)
