import math

import numpy as np
import pytest

from oie.errors import DomainError
from oie.schemas import OieParams, TemParams
from oie.services.adaptation import (
    cost,
    cost_derivative,
    iterate_oie,
    iterate_tem,
    neg_grad_gamma,
    oie_fixed_point,
    oie_update,
    predict_grid,
    prediction_error,
    prediction_surface,
    tem_fixed_point,
    tem_update,
)
from oie.services.noise_models import IDENTIFIED_SIGMA_H, IDENTIFIED_SIGMA_V

PARAMS = OieParams()
PAIRS = [(sv, sh) for sv in IDENTIFIED_SIGMA_V for sh in IDENTIFIED_SIGMA_H]


# --- Prediction error and gradient ---
def test_prediction_error_is_fused_variance():
    st2 = 30.0 ** 2 + 7.5195 ** 2
    expected = st2 * 25.0 / (st2 + 25.0)
    assert prediction_error(0.5, 30.0, 5.0) == pytest.approx(expected, rel=1e-4)


def test_prediction_error_limits():
    assert prediction_error(0.5, 30.0, math.inf) == pytest.approx(30.0 ** 2 + 7.5195 ** 2, rel=1e-4)
    assert prediction_error(0.5, math.inf, 5.0) == pytest.approx(25.0)
    assert prediction_error(0.5, 30.0, 0.0) == 0.0


@pytest.mark.parametrize("sigma_v, sigma_h", PAIRS)
def test_gradient_matches_finite_differences(sigma_v, sigma_h):
    h = 1e-3
    for u in np.linspace(0.01, 1.5, 25):
        # five-point central difference of Gamma
        fd = (-prediction_error(u + 2 * h, sigma_v, sigma_h) + 8 * prediction_error(u + h, sigma_v, sigma_h)
              - 8 * prediction_error(u - h, sigma_v, sigma_h) + prediction_error(u - 2 * h, sigma_v, sigma_h)) / (12 * h)
        analytic = -neg_grad_gamma(u, sigma_v, sigma_h)
        assert analytic == pytest.approx(fd, rel=1e-6)


def test_neg_grad_value():
    assert neg_grad_gamma(0.2, 30.64, 5.06) == pytest.approx(1.2608, rel=1e-3)


def test_gradient_vanishes_without_haptic_or_visual_information():
    assert neg_grad_gamma(0.3, math.inf, 5.06) == 0.0
    assert neg_grad_gamma(0.3, 30.0, 0.0) == 0.0


def test_negative_deviation_rejected():
    with pytest.raises(DomainError):
        neg_grad_gamma(0.3, 30.0, -1.0)


# --- Update rule and fixed point ---
def test_update_with_unit_rate_matches_closed_form():
    params = OieParams(learning_rate=1.0)
    u = 0.4
    expected = neg_grad_gamma(u, 30.64, 5.06) + (1.0 - params.gamma) * u
    assert oie_update(u, 30.64, 5.06, params, clamp=False) == pytest.approx(expected)


def test_update_is_clamped():
    params = OieParams(learning_rate=5.0)
    assert oie_update(1.4, 63.66, 5.06, params) == 0.0
    assert 0.0 <= oie_update(0.0, 30.64, 7.85, params) <= params.u_max


def test_fixed_point_values():
    assert oie_fixed_point(30.64, 5.06) == pytest.approx(0.29, abs=0.02)
    assert oie_fixed_point(63.66, 5.06) == pytest.approx(0.11, abs=0.02)


@pytest.mark.parametrize("sigma_v, sigma_h", PAIRS)
def test_fixed_point_is_stationary_and_minimal(sigma_v, sigma_h):
    u_star = oie_fixed_point(sigma_v, sigma_h)
    assert 0.0 < u_star < PARAMS.u_max
    assert abs(cost_derivative(u_star, sigma_v, sigma_h)) < 1e-9
    grid = np.linspace(0.0, PARAMS.u_max, 301)
    assert cost(u_star, sigma_v, sigma_h) <= cost(grid, sigma_v, sigma_h).min() + 1e-12


def _monotonicity(sv_step, sh_step):
    sigma_v = np.arange(20.0, 80.0 + 1e-9, sv_step)
    sigma_h = np.arange(3.0, 10.0 + 1e-9, sh_step)
    grid = np.array([[oie_fixed_point(sv, sh) for sh in sigma_h] for sv in sigma_v])
    assert np.all(np.diff(grid, axis=0) <= 1e-9)
    assert np.all(np.diff(grid, axis=1) >= -1e-9)


def test_fixed_point_monotone_in_noise():
    _monotonicity(5.0, 1.0)


@pytest.mark.slow
def test_fixed_point_monotone_in_noise_fine_mesh():
    _monotonicity(0.5, 0.5)


@pytest.mark.parametrize("sigma_h", IDENTIFIED_SIGMA_H)
def test_blind_prediction_is_zero(sigma_h):
    assert oie_fixed_point(math.inf, sigma_h) < 1e-6


def test_without_haptic_channel_cocontraction_is_positive():
    assert oie_fixed_point(30.64, math.inf) > 0.0


def test_iterate_oie_converges():
    params = OieParams(learning_rate=0.1)
    trace = iterate_oie(0.8, 30.64, 5.06, params, trials=100)
    assert trace.u.size == 101
    assert trace.final == pytest.approx(oie_fixed_point(30.64, 5.06, params), abs=1e-6)
    # gradient descent with a small step never increases the cost
    assert np.all(np.diff(trace.cost) <= 1e-12)


# --- TEM ---
def test_tem_fixed_point_and_convergence():
    params = TemParams(alpha=0.05, gamma=0.9)
    assert tem_fixed_point(4.0, params) == pytest.approx(0.05 * 4.0 / 0.9)
    trace = iterate_tem(1.0, 4.0, params, trials=10)
    assert trace.final == pytest.approx(tem_fixed_point(4.0, params), abs=1e-6)


def test_tem_update():
    params = TemParams()
    assert tem_update(0.4, 2.0, params) == pytest.approx(0.05 * 2.0 + 0.5 * 0.4)
    with pytest.raises(DomainError):
        tem_update(0.4, -1.0, params)


# --- Grid and surface ---
def test_predict_grid_shape_and_range():
    grid = predict_grid()
    assert grid.shape == (3, 3)
    assert np.all(grid >= 0.0) and np.all(grid <= PARAMS.u_max)
    # more haptic noise, more cocontraction
    assert np.all(np.diff(grid, axis=1) >= -1e-9)


def test_prediction_surface_frame():
    surface = prediction_surface(n_c=6, n_p=4)
    assert surface.u_star.shape == (6, 4)
    frame = surface.to_frame()
    assert list(frame.columns) == ["sigma_c_mm", "sigma_p_nm", "sigma_v_eff", "sigma_h_eff", "u_star"]
    assert len(frame) == 24
