import numpy as np
import pandas as pd
import pytest

from oie.datasets import (
    read_calibration_points,
    read_dataset,
    read_emg,
    read_error_grid,
    read_observed_grid,
    read_series,
    write_csv,
    write_grid,
)
from oie.errors import InputSchemaError, MissingInputError


def test_grid_written_and_read_back(tmp_path, identified_grid):
    path = write_grid(identified_grid, tmp_path / "grid.csv")
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["visual_level", "haptic_level", "u_normalized"]
    np.testing.assert_allclose(read_observed_grid(path).u, identified_grid, rtol=1e-8)


def test_grid_rows_in_any_order(tmp_path):
    rows = [{"visual_level": f"V{i}", "haptic_level": f"H{j}", "u_normalized": (3 * i + j) / 8}
            for i in (2, 0, 1) for j in (1, 2, 0)]
    path = write_csv(pd.DataFrame(rows), tmp_path / "grid.csv")
    np.testing.assert_allclose(read_observed_grid(path).u, np.arange(9).reshape(3, 3) / 8)


@pytest.mark.parametrize("mutate", ["drop", "duplicate", "unknown", "range"])
def test_bad_grids_rejected(tmp_path, identified_grid, mutate):
    path = write_grid(identified_grid, tmp_path / "grid.csv")
    frame = pd.read_csv(path)
    if mutate == "drop":
        frame = frame.iloc[:-1]
    elif mutate == "duplicate":
        frame.loc[8, ["visual_level", "haptic_level"]] = ["V0", "H0"]
    elif mutate == "unknown":
        frame.loc[0, "visual_level"] = "V7"
    else:
        frame.loc[4, "u_normalized"] = 1.5
    frame.to_csv(path, index=False)
    with pytest.raises(InputSchemaError):
        read_observed_grid(path)


def test_missing_file_and_columns(tmp_path):
    with pytest.raises(MissingInputError):
        read_observed_grid(tmp_path / "absent.csv")
    path = write_csv(pd.DataFrame({"visual_level": ["V0"], "u": [0.1]}), tmp_path / "short.csv")
    with pytest.raises(InputSchemaError):
        read_observed_grid(path)
    (tmp_path / "empty.csv").write_text("")
    with pytest.raises(InputSchemaError):
        read_dataset(tmp_path / "empty.csv")


def test_error_grid_must_be_non_negative(tmp_path):
    grid = np.full((3, 3), 2.0)
    grid[1, 2] = -1.0
    path = write_grid(grid, tmp_path / "errors.csv", column="error_deg")
    with pytest.raises(InputSchemaError):
        read_error_grid(path)
    path = write_grid(np.full((3, 3), 2.5), tmp_path / "ok.csv", column="error_deg")
    assert read_error_grid(path).sum() == pytest.approx(22.5)


def test_emg_table(tmp_path):
    t = np.arange(0, 1, 0.001)
    write_csv(pd.DataFrame({"t": t, "emg_f_raw": np.sin(t), "emg_e_raw": np.cos(t)}), tmp_path / "emg.csv")
    times, flexor, extensor = read_emg(tmp_path / "emg.csv")
    assert flexor.rate == pytest.approx(1000.0)
    assert len(extensor) == t.size
    np.testing.assert_allclose(times, t)


def test_non_uniform_time_rejected(tmp_path):
    write_csv(pd.DataFrame({"t": [0.0, 0.01, 0.03], "x": [1.0, 2.0, 3.0]}), tmp_path / "s.csv")
    with pytest.raises(InputSchemaError):
        read_series(tmp_path / "s.csv", "x")


def test_calibration_points_by_muscle(tmp_path):
    frame = pd.DataFrame({"muscle": ["Flexor", "flexor", "extensor", "extensor"],
                          "envelope": [0.1, 0.2, 0.3, 0.4], "torque": [1.0, 2.0, 3.0, 4.0]})
    points = read_calibration_points(write_csv(frame, tmp_path / "cal.csv"))
    assert points["flexor"].shape == (2, 2)
    np.testing.assert_allclose(points["extensor"][:, 1], [3.0, 4.0])
    frame.loc[0, "muscle"] = "biceps"
    with pytest.raises(InputSchemaError):
        read_calibration_points(write_csv(frame, tmp_path / "bad.csv"))
