"""
CSV input and output. Every table has a header row; floats are written with
nine significant digits.
"""
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import InputSchemaError, MissingInputError, UsageError
from .models import EmgSeries, HapticLevel, NoiseCondition, ObservedGrid, TrialRecord, VisualLevel
from .services.protocol import DATASET_COLUMNS

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.9g"
GRID_COLUMNS = ["visual_level", "haptic_level", "u_normalized"]
ERROR_GRID_COLUMNS = ["visual_level", "haptic_level", "error_deg"]
EMG_COLUMNS = ["t", "emg_f_raw", "emg_e_raw"]
CALIBRATION_COLUMNS = ["muscle", "envelope", "torque"]


# --- Writing ---
def write_csv(frame: pd.DataFrame, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path


def write_trial(rec: TrialRecord, path) -> Path:
    return write_csv(rec.to_frame(), path)


def write_grid(u, path, column: str = "u_normalized") -> Path:
    u = np.asarray(u, dtype=float).reshape(3, 3)
    rows = [
        {"visual_level": v.value, "haptic_level": h.value, column: u[v.index, h.index]}
        for v in VisualLevel for h in HapticLevel
    ]
    return write_csv(pd.DataFrame(rows), path)


# --- Reading ---
def read_csv(path, required: list[str] | None = None) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise MissingInputError(f"Input file not found: {path}")
    try:
        frame = pd.read_csv(path)
    except (pd.errors.EmptyDataError, pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise InputSchemaError(f"Cannot parse {path} as CSV", detail=str(exc)) from exc
    if required:
        missing = [c for c in required if c not in frame.columns]
        if missing:
            raise InputSchemaError(f"{path.name} is missing columns {missing}", detail=f"found {list(frame.columns)}")
    return frame


def _grid_from_frame(frame: pd.DataFrame, column: str, source: str) -> np.ndarray:
    grid = np.full((3, 3), np.nan)
    seen = set()
    for row in frame.itertuples(index=False):
        label = f"{str(getattr(row, 'visual_level')).strip()}{str(getattr(row, 'haptic_level')).strip()}"
        try:
            cond = NoiseCondition.from_label(label)
        except UsageError:
            raise InputSchemaError(f"{source}: unknown condition '{label}'") from None
        if cond.label in seen:
            raise InputSchemaError(f"{source}: condition {cond.label} appears twice")
        seen.add(cond.label)
        try:
            grid[cond.visual.index, cond.haptic.index] = float(getattr(row, column))
        except (TypeError, ValueError):
            raise InputSchemaError(f"{source}: non-numeric {column} for {cond.label}") from None
    if len(seen) != 9:
        missing = sorted({c.label for c in NoiseCondition.grid()} - seen)
        raise InputSchemaError(f"{source}: grid is incomplete", detail=f"missing {missing}")
    return grid


def read_observed_grid(path) -> ObservedGrid:
    frame = read_csv(path, GRID_COLUMNS)
    return ObservedGrid(u=_grid_from_frame(frame, "u_normalized", Path(path).name))


def read_error_grid(path) -> np.ndarray:
    frame = read_csv(path, ERROR_GRID_COLUMNS)
    grid = _grid_from_frame(frame, "error_deg", Path(path).name)
    if not np.all(np.isfinite(grid)) or np.any(grid < 0):
        raise InputSchemaError("Tracking errors must be finite and non-negative")
    return grid


def read_dataset(path) -> pd.DataFrame:
    return read_csv(path, [c for c in DATASET_COLUMNS if c != "u_norm"])


def _uniform_rate(t: np.ndarray, source: str) -> float:
    if t.size < 2:
        raise InputSchemaError(f"{source}: need at least two samples")
    steps = np.diff(t)
    if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-6, atol=0.0):
        raise InputSchemaError(f"{source}: time column must be uniformly increasing")
    return 1.0 / float(steps.mean())


def read_emg(path) -> tuple[np.ndarray, EmgSeries, EmgSeries]:
    """(t, flexor raw, extensor raw) from a (t, emg_f_raw, emg_e_raw) table."""
    frame = read_csv(path, EMG_COLUMNS)
    t = frame["t"].to_numpy(dtype=float)
    rate = _uniform_rate(t, Path(path).name)
    return t, EmgSeries(frame["emg_f_raw"].to_numpy(dtype=float), rate), EmgSeries(frame["emg_e_raw"].to_numpy(dtype=float), rate)


def read_calibration_points(path) -> dict[str, np.ndarray]:
    """Per muscle ('flexor' / 'extensor'), an (n, 2) array of (envelope, torque)."""
    frame = read_csv(path, CALIBRATION_COLUMNS)
    muscles = frame["muscle"].astype(str).str.strip().str.lower()
    unknown = sorted(set(muscles) - {"flexor", "extensor"})
    if unknown:
        raise InputSchemaError(f"Unknown muscle names {unknown}", detail="expected flexor or extensor")
    return {
        name: frame.loc[muscles == name, ["envelope", "torque"]].to_numpy(dtype=float)
        for name in ("flexor", "extensor") if (muscles == name).any()
    }


def read_series(path, column: str) -> tuple[np.ndarray, float]:
    """One column of a table with a uniform `t` column, plus its sampling rate."""
    frame = read_csv(path, ["t", column])
    t = frame["t"].to_numpy(dtype=float)
    return frame[column].to_numpy(dtype=float), _uniform_rate(t, Path(path).name)
