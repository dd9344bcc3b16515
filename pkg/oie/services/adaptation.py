"""
OIE cost V(u) = Gamma(u) + gamma/2 u^2, its gradient, the per-trial update
and fixed point, the TEM baseline, and grid / surface predictions.

An infinite sigma_v means no visual feedback (blind); an infinite sigma_h
means no haptic channel. Both are passed as math.inf.
"""
import logging
import math

import numpy as np
from scipy.optimize import bisect

from oie.models import AdaptationTrace, HAPTIC_LEVELS_NM, PredictionSurface, VISUAL_LEVELS_MM
from oie.schemas import ComplianceModel, HapticRegression, OieParams, TemParams, VisualRegression
from oie.services.noise_models import (
    DEFAULT_COMPLIANCE,
    haptic_effective,
    require_non_negative,
    sigma_kappa,
    sigma_kappa_derivative,
    sigma_t_squared,
    visual_effective,
)

logger = logging.getLogger(__name__)

FIXED_POINT_GRID = 512


def _scalar(x):
    x = np.asarray(x, dtype=float)
    return x[()] if x.ndim == 0 else x


def _fused_variance(st2, sh2):
    st2, sh2 = np.broadcast_arrays(np.asarray(st2, dtype=float), np.asarray(sh2, dtype=float))
    with np.errstate(invalid="ignore", divide="ignore"):
        out = st2 * sh2 / (st2 + sh2)
    out = np.where(np.isinf(sh2), st2, out)
    out = np.where(np.isinf(st2), sh2, out)
    out = np.where(st2 + sh2 == 0.0, 0.0, out)
    return _scalar(out)


def _haptic_weight(st2, sh2):
    """sigma_h^2 / (sigma_t^2 + sigma_h^2): 0 when blind, 1 without a haptic channel."""
    st2, sh2 = np.broadcast_arrays(np.asarray(st2, dtype=float), np.asarray(sh2, dtype=float))
    with np.errstate(invalid="ignore", divide="ignore"):
        w = sh2 / (st2 + sh2)
    w = np.where(np.isinf(sh2), 1.0, w)
    w = np.where(np.isinf(st2), 0.0, w)
    w = np.where(st2 + sh2 == 0.0, 0.0, w)
    return w


def prediction_error(u, sigma_v, sigma_h, compliance: ComplianceModel = DEFAULT_COMPLIANCE):
    """Maximum-likelihood fused variance sigma_t^2 sigma_h^2 / (sigma_t^2 + sigma_h^2)."""
    require_non_negative("u", u)
    require_non_negative("sigma_h", sigma_h)
    st2 = sigma_t_squared(u, sigma_v, compliance)
    return _fused_variance(st2, np.square(sigma_h))


def cost(u, sigma_v, sigma_h, params: OieParams = OieParams()):
    return prediction_error(u, sigma_v, sigma_h, params.compliance) + 0.5 * params.gamma * np.square(u)


def neg_grad_gamma(u, sigma_v, sigma_h, compliance: ComplianceModel = DEFAULT_COMPLIANCE):
    """
    -dGamma/du = [sigma_h^2 / (sigma_t^2 + sigma_h^2)]^2 * (-d sigma_t^2/du).
    Non-negative; zero without haptic information or without vision.
    """
    require_non_negative("u", u)
    require_non_negative("sigma_h", sigma_h)
    st2 = sigma_t_squared(u, sigma_v, compliance)
    w = _haptic_weight(st2, np.square(sigma_h))
    drive = -2.0 * sigma_kappa(u, compliance) * sigma_kappa_derivative(u, compliance)
    return _scalar(w * w * drive)


def cost_derivative(u, sigma_v, sigma_h, params: OieParams = OieParams()):
    """dV/du = -neg_grad_gamma + gamma u."""
    return -neg_grad_gamma(u, sigma_v, sigma_h, params.compliance) + params.gamma * np.asarray(u, dtype=float)


def oie_update(u: float, sigma_v: float, sigma_h: float, params: OieParams = OieParams(), clamp: bool = True) -> float:
    """One trial of gradient descent on V. With learning_rate=1 and clamp=False this is -dGamma/du + (1-gamma) u."""
    step = float(u - params.learning_rate * cost_derivative(u, sigma_v, sigma_h, params))
    if clamp:
        return min(max(step, 0.0), params.u_max)
    return step


def oie_fixed_point(sigma_v: float, sigma_h: float, params: OieParams = OieParams(),
                    grid_points: int = FIXED_POINT_GRID) -> float:
    """
    Global minimiser of V on [0, u_max]. dV/du is scanned on a grid, every
    sign change is bisected, and the candidate (roots, 0, u_max) with the
    lowest cost wins; ties go to the smaller u.
    """
    grid_points = max(int(grid_points), FIXED_POINT_GRID)
    grid = np.linspace(0.0, params.u_max, grid_points)
    d = cost_derivative(grid, sigma_v, sigma_h, params)

    def dv(x):
        return float(cost_derivative(x, sigma_v, sigma_h, params))

    candidates = [0.0]
    for i in range(grid_points - 1):
        if d[i] == 0.0 and i > 0:
            candidates.append(float(grid[i]))
        elif d[i] * d[i + 1] < 0.0:
            candidates.append(bisect(dv, grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200))
    if d[-1] < 0.0:
        candidates.append(params.u_max)

    best_u, best_cost = None, math.inf
    for cand in sorted(candidates):
        c = float(cost(cand, sigma_v, sigma_h, params))
        if c < best_cost:
            best_u, best_cost = cand, c
    return float(best_u)


def iterate_oie(u0: float, sigma_v: float, sigma_h: float, params: OieParams = OieParams(),
                trials: int = 9) -> AdaptationTrace:
    us = [float(u0)]
    for _ in range(trials):
        us.append(oie_update(us[-1], sigma_v, sigma_h, params))
    u = np.asarray(us)
    return AdaptationTrace(trial=np.arange(u.size), u=u, cost=np.asarray(cost(u, sigma_v, sigma_h, params), dtype=float))


# --- TEM baseline ---
def tem_update(u: float, e: float, params: TemParams = TemParams()) -> float:
    """alpha e + (1 - gamma) u, clamped at 0."""
    require_non_negative("u", u)
    require_non_negative("e", e)
    return max(0.0, params.alpha * e + (1.0 - params.gamma) * u)


def tem_fixed_point(e, params: TemParams = TemParams()):
    require_non_negative("e", e)
    return params.alpha * np.asarray(e, dtype=float) / params.gamma


def iterate_tem(u0: float, e: float, params: TemParams = TemParams(), trials: int = 9) -> AdaptationTrace:
    us = [float(u0)]
    for _ in range(trials):
        us.append(tem_update(us[-1], e, params))
    u = np.asarray(us)
    # TEM has no cost of its own; report the squared distance to its fixed point
    target = float(tem_fixed_point(e, params))
    return AdaptationTrace(trial=np.arange(u.size), u=u, cost=(u - target) ** 2)


# --- Grid and surface ---
def predict_from_effective(sigma_v, sigma_h, params: OieParams = OieParams()) -> np.ndarray:
    """Fixed points on the (visual i, haptic j) grid of effective deviations."""
    sigma_v = np.asarray(sigma_v, dtype=float)
    sigma_h = np.asarray(sigma_h, dtype=float)
    out = np.empty((sigma_v.size, sigma_h.size))
    for i, sv in enumerate(sigma_v):
        for j, sh in enumerate(sigma_h):
            out[i, j] = oie_fixed_point(float(sv), float(sh), params)
    return out


def predict_grid(visual: VisualRegression = VisualRegression(), haptic: HapticRegression = HapticRegression(),
                 params: OieParams = OieParams(), sigma_c=VISUAL_LEVELS_MM, sigma_p=HAPTIC_LEVELS_NM) -> np.ndarray:
    sigma_v = visual_effective(np.asarray(sigma_c, dtype=float), visual)
    sigma_h = haptic_effective(np.asarray(sigma_p, dtype=float), haptic)
    grid = predict_from_effective(sigma_v, sigma_h, params)
    logger.debug(f"Predicted grid:\n{np.array2string(grid, precision=4)}")
    return grid


def prediction_surface(visual: VisualRegression = VisualRegression(), haptic: HapticRegression = HapticRegression(),
                       params: OieParams = OieParams(), n_c: int = 30, n_p: int = 30,
                       sigma_c_max: float = 60.0, sigma_p_max: float = 0.2) -> PredictionSurface:
    sigma_c = np.linspace(0.0, sigma_c_max, n_c)
    sigma_p = np.linspace(0.0, sigma_p_max, n_p)
    sigma_v = np.atleast_1d(visual_effective(sigma_c, visual))
    sigma_h = np.atleast_1d(haptic_effective(sigma_p, haptic))
    u_star = predict_from_effective(sigma_v, sigma_h, params)
    logger.info(f"Prediction surface {n_c}x{n_p}: u* in [{u_star.min():.4f}, {u_star.max():.4f}]")
    return PredictionSurface(sigma_c=sigma_c, sigma_p=sigma_p, sigma_v_eff=sigma_v, sigma_h_eff=sigma_h, u_star=u_star)
