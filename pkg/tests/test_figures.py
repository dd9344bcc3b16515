import xml.etree.ElementTree as ET

import numpy as np
import pandas as pd
import pytest

from oie.errors import DomainError
from oie.models import ComparisonReport, ObservedGrid, Spectrum
from oie.schemas import FigureSpec
from oie.services.adaptation import prediction_surface
from oie.services.figures import MAX_SVG_BYTES, FigureService, format_number

NS = "{http://www.w3.org/2000/svg}"


def _parse(svg: str) -> ET.Element:
    return ET.fromstring(svg.encode("utf-8"))


def _bars_data():
    return pd.DataFrame({
        "category": ["V0H0", "V0H0", "V1H1", "V1H1"],
        "series": ["combined", "visual", "combined", "visual"],
        "value": [1.0, -0.5, 2.0, 0.25],
        "error": [0.1, 0.0, 0.2, 0.05],
    })


def test_bars_render_valid_svg():
    spec = FigureSpec(figure_id="demo", kind="bars", title="Errors <per> condition & mode")
    root = _parse(FigureService.render(spec, _bars_data()))
    assert root.tag == f"{NS}svg"
    assert root.find(f"{NS}title").text == "Errors <per> condition & mode"
    bars = [r for r in root.iter(f"{NS}rect") if r.find(f"{NS}title") is not None]
    assert len(bars) == 4
    assert all(float(b.get("height")) >= 0 for b in bars)
    legend = root.find(f".//{NS}g[@id='legend']")
    assert [t.text for t in legend.iter(f"{NS}text")] == ["combined", "visual"]


def test_lines_single_point_gets_marker():
    spec = FigureSpec(figure_id="one", kind="lines")
    data = pd.DataFrame({"x": [1.0], "y": [2.0], "series": ["only"]})
    root = _parse(FigureService.render(spec, data))
    assert len(list(root.iter(f"{NS}circle"))) == 1


def test_heatmap_marks_missing_cells():
    spec, frame = FigureService.grid_heatmap(np.array([[0.1, 0.2, np.nan], [0.3, 0.4, 0.5], [0.6, 0.7, 0.8]]),
                                             "grid", "Grid")
    root = _parse(FigureService.render(spec, frame))
    plot = root.find(f".//{NS}g[@id='plot']")
    fills = [r.get("fill") for r in plot.iter(f"{NS}rect")]
    assert len(fills) == 9
    assert fills.count("#bbbbbb") == 1
    assert "#440154" in fills and "#fde725" in fills


def test_render_rejects_bad_data():
    with pytest.raises(DomainError):
        FigureService.render(FigureSpec(figure_id="e", kind="bars"), pd.DataFrame(columns=["category", "series", "value"]))
    with pytest.raises(DomainError):
        FigureService.render(FigureSpec(figure_id="m", kind="lines"), pd.DataFrame({"x": [1.0], "y": [1.0]}))
    with pytest.raises(DomainError):
        FigureService.render(FigureSpec(figure_id="n", kind="lines"),
                             pd.DataFrame({"x": [1.0, 2.0], "y": [1.0, np.inf], "series": ["a", "a"]}))
    spec, frame = FigureService.grid_heatmap(np.full((3, 3), np.nan), "nan", "All missing")
    with pytest.raises(DomainError):
        FigureService.render(spec, frame)


def test_emit_figure_writes_plotted_values(tmp_path):
    spec = FigureSpec(figure_id="bars_demo", kind="bars")
    svg_path, csv_path = FigureService.emit_figure(spec, _bars_data(), tmp_path / "figures")
    assert svg_path.name == "bars_demo.svg" and csv_path.name == "bars_demo.csv"
    assert svg_path.stat().st_size < MAX_SVG_BYTES
    pd.testing.assert_frame_equal(pd.read_csv(csv_path), _bars_data())


def test_comparison_bars_hold_three_series():
    observed = ObservedGrid(u=np.linspace(0, 1, 9).reshape(3, 3))
    oie = observed.u + 0.01
    tem = np.zeros((3, 3))
    report = ComparisonReport(rss_oie=0.0009, rss_tem=1.0, aicc_oie=0.0, aicc_tem=0.0, aic_oie=-1.0, aic_tem=1.0,
                              oie_predicted=oie, tem_predicted=tem, residuals_oie=oie - observed.u,
                              residuals_tem=tem - observed.u)
    spec, frame = FigureService.comparison_bars(observed, report)
    assert spec.figure_id == "model_comparison"
    assert len(frame) == 27
    cell = frame[frame["category"] == "V2H1"].set_index("series")["value"]
    assert cell["observed"] == pytest.approx(observed.u[2, 1])
    assert cell["OIE"] == pytest.approx(observed.u[2, 1] + 0.01)
    assert cell["TEM"] == 0.0


def test_condition_bars_from_summary():
    summary = pd.DataFrame({"condition": ["V0H0", "V1H0"], "mode": ["combined", "combined"],
                            "error_mean": [2.0, 3.0], "error_sem": [0.1, 0.2],
                            "u_mean": [0.3, 0.2], "u_sem": [0.01, 0.02]})
    figures = FigureService.condition_bars(summary)
    assert [spec.figure_id for spec, _ in figures] == ["condition_error", "condition_u"]
    assert figures[1][1]["value"].tolist() == [0.3, 0.2]


def test_spectrum_lines_cut_at_max_freq():
    freq = np.linspace(0, 50, 101)
    spectra = {"tau": Spectrum(freq=freq, amplitude=np.ones_like(freq))}
    spec, frame = FigureService.spectrum_lines(spectra, max_freq=10.0)
    assert frame["x"].max() == 10.0
    assert set(frame["series"]) == {"tau"}


def test_surface_heatmap_covers_mesh():
    surface = prediction_surface(n_c=6, n_p=4)
    spec, frame = FigureService.surface_heatmap(surface)
    assert spec.figure_id == "prediction_surface"
    assert len(frame) == 24
    root = _parse(FigureService.render(spec, frame))
    assert len(list(root.find(f".//{NS}g[@id='plot']").iter(f"{NS}rect"))) == 24


def test_format_number():
    assert format_number(0.123456) == "0.1235"
    assert format_number(float("nan")) == ""
    assert format_number(None) == ""
