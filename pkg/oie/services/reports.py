"""
Tabular and text reports over protocol datasets and identification fits.
"""
import logging
import math

import numpy as np
import pandas as pd
from scipy.stats import linregress

from oie.errors import DomainError
from oie.models import ComparisonReport, FitResult, HapticLevel, VisualLevel

logger = logging.getLogger(__name__)

SLOPE_COLUMNS = ["condition", "mode", "n_trials", "slope", "intercept", "r_value"]
SUMMARY_COLUMNS = ["condition", "mode", "n", "error_mean", "error_sem", "u_mean", "u_sem"]


def _condition_key(frame: pd.DataFrame) -> pd.Series:
    return frame["visual_level"].astype(str) + frame["haptic_level"].astype(str)


def slope_report(dataset: pd.DataFrame, metric: str = "u_mean", min_trials: int = 3) -> pd.DataFrame:
    """Ordinary least-squares slope and intercept of `metric` against trial index, per condition."""
    if metric not in dataset.columns:
        raise DomainError(f"Unknown metric column '{metric}'")
    inter = dataset[dataset["phase"] == "interaction"]
    if inter.empty:
        raise DomainError("Slope report needs interaction trials")

    rows = []
    for (label, mode), group in inter.assign(condition=_condition_key(inter)).groupby(["condition", "mode"], sort=True):
        group = group.sort_values("trial")
        if len(group) < min_trials:
            raise DomainError(f"Condition {label} has {len(group)} trials; at least {min_trials} are needed")
        x = group["trial"].to_numpy(dtype=float)
        y = group[metric].to_numpy(dtype=float)
        if np.ptp(y) == 0.0:
            # linregress returns nan r for a constant response
            fit_slope, fit_intercept, r = 0.0, float(y[0]), 0.0
        else:
            res = linregress(x, y)
            fit_slope, fit_intercept, r = float(res.slope), float(res.intercept), float(res.rvalue)
        rows.append({
            "condition": label, "mode": mode, "n_trials": len(group),
            "slope": fit_slope, "intercept": fit_intercept, "r_value": r,
        })
    report = pd.DataFrame(rows, columns=SLOPE_COLUMNS)
    logger.info(f"Slope report on '{metric}': {len(report)} conditions")
    return report


def condition_summary(dataset: pd.DataFrame, last_n: int = 4) -> pd.DataFrame:
    """Mean and standard error of error_deg and u_mean over the last `last_n` trials of each block."""
    if last_n < 1:
        raise DomainError("last_n must be at least 1")
    inter = dataset[dataset["phase"] == "interaction"]
    if inter.empty:
        raise DomainError("Condition summary needs interaction trials")

    tails = (inter.sort_values(["seed", "block", "trial"])
                  .groupby(["seed", "block"], sort=True)
                  .tail(last_n))
    tails = tails.assign(condition=_condition_key(tails))

    def sem(values: pd.Series) -> float:
        n = values.size
        return float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0

    rows = []
    for (label, mode), group in tails.groupby(["condition", "mode"], sort=True):
        rows.append({
            "condition": label,
            "mode": mode,
            "n": int(len(group)),
            "error_mean": float(group["error_deg"].mean()),
            "error_sem": sem(group["error_deg"]),
            "u_mean": float(group["u_mean"].mean()),
            "u_sem": sem(group["u_mean"]),
        })
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def fit_table(fit: FitResult) -> pd.DataFrame:
    """One row per cell: observed-grid position, identified deviations and predicted u."""
    rows = []
    for v in VisualLevel:
        for h in HapticLevel:
            rows.append({
                "visual_level": v.value,
                "haptic_level": h.value,
                "sigma_v": float(fit.sigma_v[v.index]),
                "sigma_h": float(fit.sigma_h[h.index]),
                "u_predicted": float(fit.predicted[v.index, h.index]),
            })
    return pd.DataFrame(rows)


def fit_summary(fit: FitResult, comparison: ComparisonReport | None = None) -> str:
    """Human-readable report of an identification run."""
    lines = [
        "Identified effective noise",
        "  level   sigma_v    sigma_h",
    ]
    for i in range(3):
        lines.append(f"  {i}     {fit.sigma_v[i]:9.4f}  {fit.sigma_h[i]:9.4f}")
    lines += [
        "",
        f"gamma*        {fit.gamma_star:.6g}" + ("  (clamped: raw estimate not positive)" if fit.gamma_violated else ""),
        f"KKT residual  {fit.kkt_residual:.3e}",
        f"RSS           {fit.rss:.3e}",
        f"AICc/n (OIE)  {fit.aic_oie:.4f}",
    ]
    if fit.aic_tem is not None:
        lines.append(f"AICc/n (TEM)  {fit.aic_tem:.4f}")
    if fit.degenerate:
        lines.append("warning: observed grid has indistinguishable rows or columns")

    lines += ["", "Predicted cocontraction (rows V0-V2, columns H0-H2)"]
    for row in fit.predicted:
        lines.append("  " + "  ".join(f"{value:7.4f}" for value in row))

    if comparison is not None:
        lines += [
            "",
            "Model comparison",
            "  model   RSS         AIC/n     AICc/n",
            f"  OIE     {comparison.rss_oie:.4e}  {comparison.aic_oie:8.4f}  {comparison.aicc_oie:8.4f}",
            f"  TEM     {comparison.rss_tem:.4e}  {comparison.aic_tem:8.4f}  {comparison.aicc_tem:8.4f}",
            f"preferred ({comparison.criterion}): {comparison.preferred.upper()}",
        ]
    return "\n".join(lines) + "\n"
