"""
Experiment protocol: solo familiarisation trials followed by blocks of noise
conditions in seeded random order, with cocontraction adapted trial by trial
by the OIE or the TEM rule.
"""
import logging
import math

import numpy as np
import pandas as pd

from oie.errors import DomainError
from oie.models import BlockMode, HapticLevel, NoiseCondition, VisualLevel
from oie.schemas import ProtocolSpec
from oie.seeding import derive_seed, make_rng
from oie.services.adaptation import oie_update, tem_update
from oie.services.emg import decompose, normalize, trial_mean
from oie.services.noise_models import haptic_effective, visual_effective
from oie.services.trial_sim import simulate_trial, tracking_error

logger = logging.getLogger(__name__)

DATASET_COLUMNS = [
    "seed", "block", "trial", "phase", "mode", "visual_level", "haptic_level",
    "error_deg", "u_set", "u_mean", "u_norm",
]


def design_blocks(spec: ProtocolSpec) -> list[tuple[NoiseCondition, BlockMode]]:
    """Blocks of the chosen design, before shuffling."""
    if spec.conditions is not None:
        chosen = [NoiseCondition.from_label(label) for label in spec.conditions]
    else:
        chosen = None

    if spec.design == "combined":
        return [(c, BlockMode.combined) for c in (chosen or NoiseCondition.grid())]
    visual = [(NoiseCondition(v, HapticLevel.H0), BlockMode.visual) for v in VisualLevel]
    haptic = [(NoiseCondition(VisualLevel.V0, h), BlockMode.haptic) for h in HapticLevel]
    if spec.design == "visual_only":
        blocks = visual
    elif spec.design == "haptic_only":
        blocks = haptic
    else:
        blocks = visual + haptic
    if chosen is not None:
        blocks = [(c, m) for c, m in blocks if c in chosen]
    return blocks


def effective_noise(condition: NoiseCondition, mode: BlockMode, spec: ProtocolSpec) -> tuple[float, float]:
    """(sigma_v, sigma_h) seen by the OIE rule in a block; infinite for an absent channel."""
    sigma_v = math.inf if mode == BlockMode.haptic else float(visual_effective(condition.sigma_c, spec.visual))
    sigma_h = math.inf if mode == BlockMode.visual else float(haptic_effective(condition.sigma_p, spec.haptic))
    return sigma_v, sigma_h


def block_order(spec: ProtocolSpec, seed: int) -> list[tuple[NoiseCondition, BlockMode]]:
    blocks = design_blocks(spec)
    order = make_rng(seed, "blocks").permutation(len(blocks))
    return [blocks[i] for i in order]


def run_protocol(spec: ProtocolSpec, seed: int) -> pd.DataFrame:
    """One simulated participant; rows in (block, trial) order."""
    rows = []
    skip = spec.transient_skip_s

    def measure(rec):
        parts = decompose(rec.emg_f, rec.emg_e)
        return tracking_error(rec), trial_mean(parts.cocontraction, rec.rate, skip_s=skip)

    solo = NoiseCondition()
    for i in range(spec.solo_trials):
        rec = simulate_trial(solo, spec.u_initial, spec.plant, derive_seed(seed, f"solo:{i}"),
                             target=spec.target, coupled=False, vision=True)
        err, u_mean = measure(rec)
        rows.append({
            "seed": seed, "block": 0, "trial": i + 1, "phase": "solo", "mode": BlockMode.solo.value,
            "visual_level": solo.visual.value, "haptic_level": solo.haptic.value,
            "error_deg": err, "u_set": spec.u_initial, "u_mean": u_mean,
        })

    u = spec.u_initial
    order = block_order(spec, seed) if spec.trials_per_block > 0 else []
    for b, (condition, mode) in enumerate(order, start=1):
        sigma_v, sigma_h = effective_noise(condition, mode, spec)
        logger.info(f"Block {b}: {condition.label} ({mode.value}), sigma_v={sigma_v:.3f} sigma_h={sigma_h:.3f}")
        for trial in range(1, spec.trials_per_block + 1):
            rec = simulate_trial(condition, u, spec.plant, derive_seed(seed, f"trial:{b}:{trial}"),
                                 target=spec.target, coupled=mode != BlockMode.visual,
                                 vision=mode != BlockMode.haptic)
            err, u_mean = measure(rec)
            rows.append({
                "seed": seed, "block": b, "trial": trial, "phase": "interaction", "mode": mode.value,
                "visual_level": condition.visual.value, "haptic_level": condition.haptic.value,
                "error_deg": err, "u_set": u, "u_mean": u_mean,
            })
            if spec.rule == "oie":
                u = oie_update(u, sigma_v, sigma_h, spec.oie)
            else:
                u = tem_update(u, err, spec.tem)
            logger.debug(f"  trial {trial}: error={err:.3f} deg, next u={u:.4f}")

    dataset = pd.DataFrame(rows, columns=DATASET_COLUMNS)
    interaction = dataset["phase"] == "interaction"
    if interaction.sum() > 0:
        try:
            dataset.loc[interaction, "u_norm"] = normalize(dataset.loc[interaction, "u_mean"].to_numpy())
        except DomainError as exc:
            logger.warning(f"Normalised cocontraction left empty: {exc}")
    logger.info(f"Protocol finished: {len(dataset)} trials, rule={spec.rule}, design={spec.design}")
    return dataset


def last_block_means(dataset: pd.DataFrame, column: str = "u_set") -> dict[str, float]:
    """Value of `column` on the last trial of each interaction block, keyed by condition label."""
    inter = dataset[dataset["phase"] == "interaction"]
    out = {}
    for _, group in inter.groupby("block", sort=True):
        last = group.sort_values("trial").iloc[-1]
        out[f"{last['visual_level']}{last['haptic_level']}"] = float(last[column])
    return out


def observed_grid_from_dataset(dataset: pd.DataFrame, column: str = "u_norm") -> np.ndarray:
    """3x3 grid of the last-trial values of `column` per combined condition (NaN where absent)."""
    grid = np.full((3, 3), np.nan)
    for label, value in last_block_means(dataset, column).items():
        c = NoiseCondition.from_label(label)
        grid[c.visual.index, c.haptic.index] = value
    return grid
