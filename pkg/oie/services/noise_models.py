"""
Effective sensory deviations as functions of the physical noise magnitudes
and of cocontraction, plus the least-squares fits of their coefficients.

Deviations are in dimensionless model units. Cocontraction u is the
normalized cocontraction. Functions accept floats or numpy arrays.
"""
import logging
from typing import Iterable, Sequence

import numpy as np
from scipy.special import expit

from oie.errors import DomainError, FitError
from oie.models import HAPTIC_LEVELS_NM, VISUAL_LEVELS_MM
from oie.schemas import ComplianceModel, HapticRegression, VisualRegression

logger = logging.getLogger(__name__)

DEFAULT_COMPLIANCE = ComplianceModel()

# Identified effective deviations per visual level (V0, V1, V2) and haptic level (H0, H1, H2)
IDENTIFIED_SIGMA_V = (30.64, 63.66, 65.30)
IDENTIFIED_SIGMA_H = (5.06, 5.86, 7.85)

__all__ = [
    "DEFAULT_COMPLIANCE", "IDENTIFIED_SIGMA_V", "IDENTIFIED_SIGMA_H", "VISUAL_LEVELS_MM", "HAPTIC_LEVELS_NM",
    "sigma_kappa", "sigma_kappa_derivative", "sigma_t_squared", "visual_effective", "haptic_effective",
    "fit_visual_regression", "fit_haptic_regression", "visual_residual", "identified_visual_points",
    "identified_haptic_points",
]


def require_non_negative(name: str, value) -> None:
    arr = np.asarray(value, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0):
        raise DomainError(f"{name} must be non-negative", detail=f"got {value!r}")


# --- Compliance noise ---
def sigma_kappa(u, model: ComplianceModel = DEFAULT_COMPLIANCE):
    """c0 + c1 exp(-c2 u), strictly decreasing towards c0."""
    require_non_negative("u", u)
    return model.c0 + model.c1 * np.exp(-model.c2 * np.asarray(u, dtype=float))[()]


def sigma_kappa_derivative(u, model: ComplianceModel = DEFAULT_COMPLIANCE):
    require_non_negative("u", u)
    return -model.c1 * model.c2 * np.exp(-model.c2 * np.asarray(u, dtype=float))[()]


def sigma_t_squared(u, sigma_v, model: ComplianceModel = DEFAULT_COMPLIANCE):
    """Variance of the target estimate from vision: sigma_v^2 + sigma_kappa(u)^2."""
    require_non_negative("sigma_v", sigma_v)
    return np.square(sigma_v) + np.square(sigma_kappa(u, model))


# --- Regressions ---
def visual_effective(sigma_c, reg: VisualRegression = VisualRegression()):
    """alpha_v + beta_v / (1 + exp(-sigma_c)), sigma_c in mm."""
    require_non_negative("sigma_c", sigma_c)
    return reg.alpha_v + reg.beta_v * expit(np.asarray(sigma_c, dtype=float))[()]


def haptic_effective(sigma_p, reg: HapticRegression = HapticRegression()):
    """alpha_p + beta_p sigma_p + delta_p sigma_p^2, sigma_p in Nm."""
    require_non_negative("sigma_p", sigma_p)
    s = np.asarray(sigma_p, dtype=float)
    return (reg.alpha_p + reg.beta_p * s + reg.delta_p * s * s)[()]


def _as_points(points: Iterable[Sequence[float]]) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(list(points), dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DomainError("Regression points must be (x, y) pairs")
    return arr[:, 0], arr[:, 1]


def fit_visual_regression(points, beta_fixed: float | None = None) -> VisualRegression:
    """
    Least-squares (alpha_v, beta_v) over (sigma_c, sigma_v) points. The model
    is linear in its coefficients once the sigmoid is evaluated, so this is a
    plain linear solve. With `beta_fixed` only the offset is estimated.
    """
    sigma_c, sigma_v = _as_points(points)
    require_non_negative("sigma_c", sigma_c)
    s = expit(sigma_c)

    if beta_fixed is not None:
        if sigma_c.size < 1:
            raise FitError("Visual regression needs at least one point")
        alpha = float(np.mean(sigma_v - beta_fixed * s))
        return VisualRegression(alpha_v=alpha, beta_v=float(beta_fixed))

    if sigma_c.size < 2 or np.ptp(s) == 0.0:
        raise FitError("Visual regression design is rank deficient",
                       detail="need two points whose sigmoid(sigma_c) differ")
    design = np.column_stack([np.ones_like(s), s])
    coef, _, rank, _ = np.linalg.lstsq(design, sigma_v, rcond=None)
    if rank < 2:
        raise FitError("Visual regression design is rank deficient")
    reg = VisualRegression(alpha_v=float(coef[0]), beta_v=float(coef[1]))
    logger.debug(f"Visual regression alpha_v={reg.alpha_v:.4f} beta_v={reg.beta_v:.4f}")
    return reg


def visual_residual(points, reg: VisualRegression) -> float:
    """Sum of squared residuals of `reg` over (sigma_c, sigma_v) points."""
    sigma_c, sigma_v = _as_points(points)
    return float(np.sum((visual_effective(sigma_c, reg) - sigma_v) ** 2))


def fit_haptic_regression(points, quadratic: bool = True) -> HapticRegression:
    """
    Least-squares polynomial in sigma_p. Exactly three distinct abscissae give
    the interpolating quadratic; `quadratic=False` fits a line (delta_p = 0).
    """
    sigma_p, sigma_h = _as_points(points)
    require_non_negative("sigma_p", sigma_p)
    degree = 2 if quadratic else 1
    distinct = np.unique(sigma_p).size
    if distinct < degree + 1:
        raise FitError(f"Haptic regression needs {degree + 1} distinct sigma_p values", detail=f"got {distinct}")

    design = np.vander(sigma_p, degree + 1, increasing=True)
    coef, _, _, _ = np.linalg.lstsq(design, sigma_h, rcond=None)
    delta = float(coef[2]) if quadratic else 0.0
    return HapticRegression(alpha_p=float(coef[0]), beta_p=float(coef[1]), delta_p=delta)


def identified_visual_points() -> list[tuple[float, float]]:
    return list(zip(VISUAL_LEVELS_MM, IDENTIFIED_SIGMA_V))


def identified_haptic_points() -> list[tuple[float, float]]:
    return list(zip(HAPTIC_LEVELS_NM, IDENTIFIED_SIGMA_H))
