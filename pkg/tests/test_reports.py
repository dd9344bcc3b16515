import math

import numpy as np
import pandas as pd
import pytest

from oie.errors import DomainError
from oie.models import FitResult
from oie.schemas import ProtocolSpec, TargetSpec, TemParams
from oie.services.identification import compare_models
from oie.services.protocol import DATASET_COLUMNS, run_protocol
from oie.services.reports import SLOPE_COLUMNS, SUMMARY_COLUMNS, condition_summary, fit_summary, fit_table, slope_report
from tests.conftest import IDENTIFIED_XI


def _dataset(blocks: dict[str, list[float]], seed: int = 0, solo: int = 1) -> pd.DataFrame:
    rows = []
    for i in range(solo):
        rows.append({"seed": seed, "block": 0, "trial": i + 1, "phase": "solo", "mode": "solo",
                     "visual_level": "V0", "haptic_level": "H0", "error_deg": 9.0, "u_set": 0.8, "u_mean": 0.8})
    for b, (label, values) in enumerate(blocks.items(), start=1):
        for k, value in enumerate(values, start=1):
            rows.append({"seed": seed, "block": b, "trial": k, "phase": "interaction", "mode": "combined",
                         "visual_level": label[:2], "haptic_level": label[2:], "error_deg": 2.0 * value,
                         "u_set": value, "u_mean": value})
    return pd.DataFrame(rows, columns=DATASET_COLUMNS)


# --- Slopes ---
def test_slope_of_linear_decline():
    report = slope_report(_dataset({"V1H1": [0.8, 0.7, 0.6, 0.5], "V0H0": [0.4, 0.4, 0.4]}))
    assert list(report.columns) == SLOPE_COLUMNS
    rows = report.set_index("condition")
    assert rows.loc["V1H1", "slope"] == pytest.approx(-0.1)
    assert rows.loc["V1H1", "intercept"] == pytest.approx(0.9)
    assert rows.loc["V1H1", "r_value"] == pytest.approx(-1.0)
    assert rows.loc["V0H0", "slope"] == 0.0
    assert rows.loc["V0H0", "intercept"] == pytest.approx(0.4)


def test_slope_report_errors():
    data = _dataset({"V1H1": [0.8, 0.7]})
    with pytest.raises(DomainError):
        slope_report(data)
    with pytest.raises(DomainError):
        slope_report(data, metric="force")
    with pytest.raises(DomainError):
        slope_report(_dataset({}))


def test_simulated_oie_block_declines():
    spec = ProtocolSpec(solo_trials=0, conditions=["V1H1"], target=TargetSpec(duration=2.0))
    report = slope_report(run_protocol(spec, seed=0))
    assert report.iloc[0]["n_trials"] == 9
    assert report.iloc[0]["slope"] < 0.0


# --- Condition summary ---
def test_condition_summary_uses_block_tails():
    first = _dataset({"V2H0": [0.9, 0.5, 0.3, 0.1]}, seed=0)
    second = _dataset({"V2H0": [0.9, 0.5, 0.5, 0.3]}, seed=1)
    summary = condition_summary(pd.concat([first, second], ignore_index=True), last_n=2)
    assert list(summary.columns) == SUMMARY_COLUMNS
    row = summary.iloc[0]
    assert row["condition"] == "V2H0" and row["n"] == 4
    values = np.array([0.3, 0.1, 0.5, 0.3])
    assert row["u_mean"] == pytest.approx(values.mean())
    assert row["u_sem"] == pytest.approx(values.std(ddof=1) / 2.0)
    assert row["error_mean"] == pytest.approx(2.0 * values.mean())


def test_condition_summary_single_trial_has_zero_sem():
    summary = condition_summary(_dataset({"V0H1": [0.4]}), last_n=4)
    assert summary.iloc[0]["u_sem"] == 0.0


def test_condition_summary_errors():
    with pytest.raises(DomainError):
        condition_summary(_dataset({"V0H1": [0.4]}), last_n=0)
    with pytest.raises(DomainError):
        condition_summary(_dataset({}))


# --- Fit reports ---
def _fit(identified_grid):
    return FitResult(xi_star=IDENTIFIED_XI.copy(), gamma_star=2.26, kkt_residual=1e-14, predicted=identified_grid,
                     rss=1e-10, aic_oie=-20.0)


def test_fit_table(identified_grid):
    table = fit_table(_fit(identified_grid))
    assert len(table) == 9
    row = table[(table["visual_level"] == "V2") & (table["haptic_level"] == "H1")].iloc[0]
    assert row["sigma_v"] == pytest.approx(IDENTIFIED_XI[2])
    assert row["sigma_h"] == pytest.approx(IDENTIFIED_XI[4])
    assert row["u_predicted"] == pytest.approx(identified_grid[2, 1])


def test_fit_summary_text(identified_observed, identified_grid):
    fit = _fit(identified_grid)
    errors = np.array([[2.0, 2.4, 3.1], [2.6, 3.0, 3.6], [2.9, 3.3, 4.0]])
    comparison = compare_models(identified_observed, fit, TemParams(), errors)
    text = fit_summary(fit, comparison)
    for needle in ("gamma*", "KKT residual", "RSS", "AICc/n (OIE)", "Model comparison", "preferred (aic): OIE"):
        assert needle in text
    assert "warning" not in text
    assert math.isclose(float(text.split("gamma*")[1].split()[0]), 2.26)


def test_fit_summary_reports_tem_score_after_comparison(identified_observed, identified_grid):
    fit = _fit(identified_grid)
    assert "AICc/n (TEM)" not in fit_summary(fit)
    errors = np.array([[2.0, 2.4, 3.1], [2.6, 3.0, 3.6], [2.9, 3.3, 4.0]])
    compared = fit.with_comparison(compare_models(identified_observed, fit, TemParams(), errors))
    assert "AICc/n (TEM)" in fit_summary(compared)
