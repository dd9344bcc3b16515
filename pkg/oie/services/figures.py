"""
SVG figures rendered from jinja2 templates. Every figure is written next to
the CSV holding exactly the plotted values.

Data bindings per kind:
  bars     category, series, value[, error]
  lines    x, y, series
  heatmap  x, y, value (one row per mesh cell)
"""
import logging
from functools import lru_cache
from pathlib import Path

import numpy as np
import pandas as pd
from jinja2 import Environment, FileSystemLoader, StrictUndefined, select_autoescape

from oie.datasets import write_csv
from oie.errors import DomainError
from oie.models import ComparisonReport, HapticLevel, ObservedGrid, PredictionSurface, Spectrum, VisualLevel
from oie.schemas import FigureSpec

logger = logging.getLogger(__name__)

TEMPLATES_DIR = Path(__file__).resolve().parent.parent / "templates"
MAX_SVG_BYTES = 2 * 1024 * 1024
MARGIN = {"left": 72, "right": 150, "top": 48, "bottom": 60}
PALETTE = ["#1b6ca8", "#d1495b", "#edae49", "#00798c", "#66a182", "#8d6a9f"]
# viridis stops
HEAT_STOPS = ["#440154", "#3b528b", "#21918c", "#5ec962", "#fde725"]
TICKS = 5

REQUIRED = {
    "bars": ["category", "series", "value"],
    "lines": ["x", "y", "series"],
    "heatmap": ["x", "y", "value"],
}


def format_number(value, digits: int = 4) -> str:
    """Compact tick / label text."""
    if value is None or (isinstance(value, float) and not np.isfinite(value)):
        return ""
    return f"{float(value):.{digits}g}"


@lru_cache(maxsize=1)
def _environment() -> Environment:
    env = Environment(
        loader=FileSystemLoader(str(TEMPLATES_DIR)),
        autoescape=select_autoescape(enabled_extensions=("svg", "j2"), default_for_string=True),
        undefined=StrictUndefined,
        trim_blocks=True,
        lstrip_blocks=True,
    )
    env.filters["num"] = format_number
    return env


def _hex_to_rgb(color: str) -> np.ndarray:
    return np.array([int(color[i:i + 2], 16) for i in (1, 3, 5)], dtype=float)


class FigureService:

    # --- Layout helpers ---
    @staticmethod
    def _range(values: np.ndarray, include_zero: bool = False) -> tuple[float, float]:
        finite = values[np.isfinite(values)]
        lo, hi = float(finite.min()), float(finite.max())
        if include_zero:
            lo, hi = min(lo, 0.0), max(hi, 0.0)
        if hi == lo:
            pad = abs(lo) * 0.1 or 0.5
            lo, hi = lo - pad, hi + pad
        return lo, hi

    @staticmethod
    def _scale(lo: float, hi: float, start: float, stop: float):
        def to_px(v):
            return start + (np.asarray(v, dtype=float) - lo) / (hi - lo) * (stop - start)
        return to_px

    @staticmethod
    def _frame(spec: FigureSpec) -> dict:
        return {
            "x0": MARGIN["left"],
            "x1": spec.width - MARGIN["right"],
            "y0": MARGIN["top"],
            "y1": spec.height - MARGIN["bottom"],
        }

    @staticmethod
    def _color(value: float, lo: float, hi: float) -> str:
        if not np.isfinite(value):
            return "#bbbbbb"
        pos = 0.0 if hi == lo else (value - lo) / (hi - lo) * (len(HEAT_STOPS) - 1)
        pos = min(max(pos, 0.0), len(HEAT_STOPS) - 1.0)
        i = min(int(pos), len(HEAT_STOPS) - 2)
        rgb = (1 - (pos - i)) * _hex_to_rgb(HEAT_STOPS[i]) + (pos - i) * _hex_to_rgb(HEAT_STOPS[i + 1])
        return "#" + "".join(f"{int(round(c)):02x}" for c in rgb)

    # --- Per kind ---
    @staticmethod
    def _bars(spec: FigureSpec, data: pd.DataFrame) -> dict:
        box = FigureService._frame(spec)
        categories = list(pd.unique(data["category"].astype(str)))
        series = list(pd.unique(data["series"].astype(str)))
        err = data["error"].to_numpy(dtype=float) if "error" in data.columns else np.zeros(len(data))
        err = np.nan_to_num(err)
        values = data["value"].to_numpy(dtype=float)
        lo, hi = FigureService._range(np.concatenate([values - err, values + err]), include_zero=True)
        y = FigureService._scale(lo, hi, box["y1"], box["y0"])

        group = (box["x1"] - box["x0"]) / len(categories)
        width = group * 0.8 / len(series)
        bars = []
        for (cat, ser, value, e) in zip(data["category"].astype(str), data["series"].astype(str), values, err):
            left = box["x0"] + categories.index(cat) * group + group * 0.1 + series.index(ser) * width
            top, base = float(y(max(value, 0.0))), float(y(min(value, 0.0)))
            bars.append({
                "x": left, "y": top, "w": width, "h": max(base - top, 0.0),
                "color": PALETTE[series.index(ser) % len(PALETTE)],
                "cx": left + width / 2, "e_top": float(y(value + e)), "e_bot": float(y(value - e)),
                "has_error": e > 0, "value": value,
            })
        return {
            "bars": bars,
            "x_ticks": [{"px": box["x0"] + (i + 0.5) * group, "label": c} for i, c in enumerate(categories)],
            "y_ticks": [{"px": float(y(v)), "label": v} for v in np.linspace(lo, hi, TICKS)],
            "zero_px": float(y(0.0)),
            "legend": [{"label": s, "color": PALETTE[i % len(PALETTE)]} for i, s in enumerate(series)],
        }

    @staticmethod
    def _lines(spec: FigureSpec, data: pd.DataFrame) -> dict:
        box = FigureService._frame(spec)
        xs = data["x"].to_numpy(dtype=float)
        ys = data["y"].to_numpy(dtype=float)
        x_lo, x_hi = FigureService._range(xs)
        y_lo, y_hi = FigureService._range(ys)
        x = FigureService._scale(x_lo, x_hi, box["x0"], box["x1"])
        y = FigureService._scale(y_lo, y_hi, box["y1"], box["y0"])

        lines = []
        for i, (name, group) in enumerate(data.groupby(data["series"].astype(str), sort=False)):
            px = x(group["x"].to_numpy(dtype=float))
            py = y(group["y"].to_numpy(dtype=float))
            lines.append({
                "points": " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py)),
                "markers": [{"x": float(a), "y": float(b)} for a, b in zip(px, py)] if len(px) == 1 else [],
                "color": PALETTE[i % len(PALETTE)],
                "label": name,
            })
        return {
            "lines": lines,
            "x_ticks": [{"px": float(x(v)), "label": v} for v in np.linspace(x_lo, x_hi, TICKS)],
            "y_ticks": [{"px": float(y(v)), "label": v} for v in np.linspace(y_lo, y_hi, TICKS)],
            "legend": [{"label": line["label"], "color": line["color"]} for line in lines],
        }

    @staticmethod
    def _heatmap(spec: FigureSpec, data: pd.DataFrame) -> dict:
        box = FigureService._frame(spec)
        xs = np.unique(data["x"].to_numpy(dtype=float))
        ys = np.unique(data["y"].to_numpy(dtype=float))
        values = data["value"].to_numpy(dtype=float)
        if not np.any(np.isfinite(values)):
            raise DomainError(f"Figure '{spec.figure_id}' has no finite values")
        v_lo, v_hi = float(np.nanmin(values)), float(np.nanmax(values))

        cw = (box["x1"] - box["x0"]) / xs.size
        ch = (box["y1"] - box["y0"]) / ys.size
        cells = []
        for xv, yv, value in zip(data["x"].to_numpy(dtype=float), data["y"].to_numpy(dtype=float), values):
            i = int(np.searchsorted(xs, xv))
            j = int(np.searchsorted(ys, yv))
            cells.append({
                "x": box["x0"] + i * cw, "y": box["y1"] - (j + 1) * ch, "w": cw, "h": ch,
                "color": FigureService._color(value, v_lo, v_hi), "value": value,
            })

        def ticks(axis_values, start, step, vertical):
            idx = np.unique(np.linspace(0, axis_values.size - 1, min(TICKS, axis_values.size)).round().astype(int))
            if vertical:
                return [{"px": start - (k + 0.5) * step, "label": axis_values[k]} for k in idx]
            return [{"px": start + (k + 0.5) * step, "label": axis_values[k]} for k in idx]

        scale_steps = np.linspace(v_lo, v_hi, 6)
        return {
            "cells": cells,
            "x_ticks": ticks(xs, box["x0"], cw, False),
            "y_ticks": ticks(ys, box["y1"], ch, True),
            "colorbar": [
                {"y": box["y0"] + k * (box["y1"] - box["y0"]) / len(scale_steps), "value": v,
                 "color": FigureService._color(v, v_lo, v_hi)}
                for k, v in enumerate(scale_steps[::-1])
            ],
            "colorbar_h": (box["y1"] - box["y0"]) / len(scale_steps),
        }

    # --- Public ---
    @staticmethod
    def render(spec: FigureSpec, data: pd.DataFrame) -> str:
        if data is None or len(data) == 0:
            raise DomainError(f"Figure '{spec.figure_id}' has no data")
        missing = [c for c in REQUIRED[spec.kind] if c not in data.columns]
        if missing:
            raise DomainError(f"Figure '{spec.figure_id}' is missing columns {missing}")
        if spec.kind != "heatmap":
            numeric = ["value"] if spec.kind == "bars" else ["x", "y"]
            if not np.all(np.isfinite(data[numeric].to_numpy(dtype=float))):
                raise DomainError(f"Figure '{spec.figure_id}' has non-finite values")

        layout = getattr(FigureService, f"_{spec.kind}")(spec, data)
        template = _environment().get_template(f"{spec.kind}.svg.j2")
        return template.render(spec=spec, box=FigureService._frame(spec), **layout)

    @staticmethod
    def emit_figure(spec: FigureSpec, data: pd.DataFrame, out_dir) -> tuple[Path, Path]:
        """Write <figure_id>.svg and <figure_id>.csv into out_dir."""
        svg = FigureService.render(spec, data)
        size = len(svg.encode("utf-8"))
        if size > MAX_SVG_BYTES:
            raise DomainError(f"Figure '{spec.figure_id}' would be {size} bytes", detail="reduce the data resolution")
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        svg_path = out_dir / f"{spec.figure_id}.svg"
        svg_path.write_text(svg, encoding="utf-8")
        csv_path = write_csv(data, out_dir / f"{spec.figure_id}.csv")
        logger.info(f"Figure {spec.figure_id}: {len(data)} data rows, {size} bytes of SVG")
        return svg_path, csv_path

    # --- Data bindings for the standard figures ---
    @staticmethod
    def condition_bars(summary: pd.DataFrame) -> list[tuple[FigureSpec, pd.DataFrame]]:
        """Tracking error and cocontraction per condition from a condition summary."""
        out = []
        for column, label in (("error", "Tracking error [deg]"), ("u", "Cocontraction [Nm]")):
            frame = pd.DataFrame({
                "category": summary["condition"],
                "series": summary["mode"],
                "value": summary[f"{column}_mean"],
                "error": summary[f"{column}_sem"],
            })
            spec = FigureSpec(figure_id=f"condition_{column}", kind="bars", title=label.split(" [")[0] + " per condition",
                              x_label="Condition", y_label=label)
            out.append((spec, frame))
        return out

    @staticmethod
    def adaptation_lines(dataset: pd.DataFrame, column: str = "u_set") -> tuple[FigureSpec, pd.DataFrame]:
        inter = dataset[dataset["phase"] == "interaction"].sort_values(["block", "trial"])
        frame = pd.DataFrame({
            "x": np.arange(1, len(inter) + 1, dtype=float),
            "y": inter[column].to_numpy(dtype=float),
            "series": (inter["visual_level"].astype(str) + inter["haptic_level"].astype(str)).to_numpy(),
        })
        spec = FigureSpec(figure_id=f"adaptation_{column}", kind="lines", title="Cocontraction across trials",
                          x_label="Trial", y_label=column)
        return spec, frame

    @staticmethod
    def spectrum_lines(spectra: dict[str, Spectrum], max_freq: float = 10.0,
                       figure_id: str = "spectra") -> tuple[FigureSpec, pd.DataFrame]:
        frames = []
        for name, spec_data in spectra.items():
            keep = spec_data.freq <= max_freq
            frames.append(pd.DataFrame({"x": spec_data.freq[keep], "y": spec_data.amplitude[keep], "series": name}))
        frame = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=["x", "y", "series"])
        spec = FigureSpec(figure_id=figure_id, kind="lines", title="Amplitude spectra",
                          x_label="Frequency [Hz]", y_label="Amplitude")
        return spec, frame

    @staticmethod
    def surface_spec() -> FigureSpec:
        return FigureSpec(figure_id="prediction_surface", kind="heatmap", title="Predicted cocontraction",
                          x_label="Visual noise sigma_c [mm]", y_label="Haptic noise sigma_p [Nm]")

    @staticmethod
    def surface_heatmap(surface: PredictionSurface) -> tuple[FigureSpec, pd.DataFrame]:
        table = surface.to_frame()
        frame = pd.DataFrame({"x": table["sigma_c_mm"], "y": table["sigma_p_nm"], "value": table["u_star"]})
        return FigureService.surface_spec(), frame

    @staticmethod
    def grid_heatmap(u, figure_id: str, title: str) -> tuple[FigureSpec, pd.DataFrame]:
        u = np.asarray(u, dtype=float).reshape(3, 3)
        frame = pd.DataFrame([
            {"x": float(v.index), "y": float(h.index), "value": u[v.index, h.index]}
            for v in VisualLevel for h in HapticLevel
        ])
        spec = FigureSpec(figure_id=figure_id, kind="heatmap", title=title,
                          x_label="Visual level", y_label="Haptic level")
        return spec, frame

    @staticmethod
    def comparison_bars(observed: ObservedGrid, comparison: ComparisonReport) -> tuple[FigureSpec, pd.DataFrame]:
        """Observed vs OIE vs TEM normalized cocontraction per cell."""
        rows = []
        for v in VisualLevel:
            for h in HapticLevel:
                cell = f"{v.value}{h.value}"
                for name, grid in (("observed", observed.u), ("OIE", comparison.oie_predicted),
                                   ("TEM", comparison.tem_predicted)):
                    rows.append({"category": cell, "series": name, "value": float(grid[v.index, h.index])})
        spec = FigureSpec(figure_id="model_comparison", kind="bars", title="Observed and predicted cocontraction",
                          x_label="Condition", y_label="Normalized cocontraction")
        return spec, pd.DataFrame(rows)
