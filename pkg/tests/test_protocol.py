import math

import numpy as np
import pandas as pd
import pytest

from oie.models import BlockMode, HapticLevel, NoiseCondition, VisualLevel
from oie.schemas import OieParams, ProtocolSpec, TargetSpec
from oie.services.adaptation import oie_fixed_point, tem_update
from oie.services.protocol import (
    DATASET_COLUMNS,
    block_order,
    design_blocks,
    effective_noise,
    last_block_means,
    observed_grid_from_dataset,
    run_protocol,
)

ONE_SECOND = TargetSpec(duration=1.0)


@pytest.mark.parametrize("design, count", [("combined", 9), ("visual_only", 3), ("haptic_only", 3), ("separate", 6)])
def test_design_block_counts(design, count):
    assert len(design_blocks(ProtocolSpec(design=design))) == count


def test_separate_design_modes():
    blocks = design_blocks(ProtocolSpec(design="separate"))
    modes = [m for _, m in blocks]
    assert modes.count(BlockMode.visual) == 3
    assert modes.count(BlockMode.haptic) == 3
    assert all(c.haptic == HapticLevel.H0 for c, m in blocks if m == BlockMode.visual)
    assert all(c.visual == VisualLevel.V0 for c, m in blocks if m == BlockMode.haptic)


def test_condition_filter():
    blocks = design_blocks(ProtocolSpec(conditions=["v1h2", "V0H0"]))
    assert [c.label for c, _ in blocks] == ["V1H2", "V0H0"]


def test_block_order_is_seeded_permutation():
    spec = ProtocolSpec()
    a = block_order(spec, 4)
    assert a == block_order(spec, 4)
    assert sorted(c.label for c, _ in a) == sorted(c.label for c in NoiseCondition.grid())
    orders = {tuple(c.label for c, _ in block_order(spec, s)) for s in range(5)}
    assert len(orders) > 1


def test_effective_noise_drops_absent_channel():
    spec = ProtocolSpec()
    cond = NoiseCondition(VisualLevel.V1, HapticLevel.H0)
    sigma_v, sigma_h = effective_noise(cond, BlockMode.visual, spec)
    assert math.isfinite(sigma_v) and sigma_h == math.inf
    sigma_v, sigma_h = effective_noise(NoiseCondition(VisualLevel.V0, HapticLevel.H1), BlockMode.haptic, spec)
    assert sigma_v == math.inf and math.isfinite(sigma_h)
    assert all(math.isfinite(x) for x in effective_noise(cond, BlockMode.combined, spec))


def test_small_protocol_dataset():
    spec = ProtocolSpec(trials_per_block=3, solo_trials=2, conditions=["V0H0", "V2H2"], target=ONE_SECOND)
    data = run_protocol(spec, seed=3)
    assert list(data.columns) == DATASET_COLUMNS
    assert len(data) == 8
    solo = data[data["phase"] == "solo"]
    inter = data[data["phase"] == "interaction"]
    assert (solo["block"] == 0).all() and solo["u_norm"].isna().all()
    assert inter.groupby("block").size().tolist() == [3, 3]
    assert inter.iloc[0]["u_set"] == spec.u_initial
    assert inter["u_norm"].between(0.0, 1.0).all()
    assert inter["u_norm"].min() == 0.0 and inter["u_norm"].max() == pytest.approx(1.0)
    pd.testing.assert_frame_equal(data, run_protocol(spec, seed=3))


def test_solo_only_protocol():
    data = run_protocol(ProtocolSpec(trials_per_block=0, solo_trials=2, target=ONE_SECOND), seed=0)
    assert len(data) == 2
    assert (data["phase"] == "solo").all()


def test_tem_rule_follows_tracking_error():
    spec = ProtocolSpec(rule="tem", trials_per_block=3, solo_trials=0, conditions=["V1H1", "V2H0"],
                        target=ONE_SECOND)
    data = run_protocol(spec, seed=1)
    u_set = data["u_set"].to_numpy()
    errors = data["error_deg"].to_numpy()
    for k in range(len(data) - 1):
        assert u_set[k + 1] == pytest.approx(tem_update(u_set[k], errors[k], spec.tem))


def test_oie_rule_converges_to_fixed_point():
    oie = OieParams(learning_rate=0.1)
    spec = ProtocolSpec(trials_per_block=30, solo_trials=0, conditions=["V0H0", "V2H2"], target=ONE_SECOND, oie=oie)
    data = run_protocol(spec, seed=0)
    finals = last_block_means(data, "u_set")
    for label, final in finals.items():
        cond = NoiseCondition.from_label(label)
        sigma_v, sigma_h = effective_noise(cond, BlockMode.combined, spec)
        assert final == pytest.approx(oie_fixed_point(sigma_v, sigma_h, oie), abs=0.02)


def test_observed_grid_from_full_design():
    spec = ProtocolSpec(trials_per_block=1, solo_trials=0, target=ONE_SECOND)
    data = run_protocol(spec, seed=2)
    grid = observed_grid_from_dataset(data)
    assert grid.shape == (3, 3)
    assert np.all(np.isfinite(grid))
    assert grid.min() == 0.0 and grid.max() == pytest.approx(1.0)


def test_observed_grid_marks_missing_cells():
    spec = ProtocolSpec(trials_per_block=1, solo_trials=0, conditions=["V1H1"], target=ONE_SECOND)
    data = run_protocol(spec, seed=2)
    grid = observed_grid_from_dataset(data, column="u_set")
    assert grid[1, 1] == spec.u_initial
    assert np.isnan(grid).sum() == 8
