"""
emg: envelopes, torque calibration and the reciprocal / cocontraction split
of a recorded flexor-extensor pair.
"""
import logging
from pathlib import Path

import pandas as pd

from oie.commands import CommandResult, add_common
from oie.datasets import read_calibration_points, read_emg, write_csv
from oie.errors import UsageError
from oie.models import Calibration
from oie.schemas import RunConfig, Settings
from oie.services.emg import apply_calibration, calibrate, decompose, envelope, spectrum, trial_mean
from oie.services.figures import FigureService

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("emg", help="process a recorded EMG pair")
    add_common(parser)
    parser.add_argument("--input", default=None, help="EMG CSV (t, emg_f_raw, emg_e_raw)")
    parser.add_argument("--calibrate", default=None, metavar="CSV",
                        help="calibration points (muscle, envelope, torque); fitted lines replace the configured ones")
    parser.add_argument("--decompose", action="store_true", help="write the torque decomposition (default with --input)")
    parser.add_argument("--spectrum", action="store_true", help="also write spectra of tau and u")
    parser.add_argument("--zero-phase", action="store_true", help="forward-backward filtering")


def execute(config: RunConfig, settings: Settings, seed: int) -> CommandResult:
    opts = config.options
    if not opts.get("input") and not opts.get("calibrate"):
        raise UsageError("emg needs --input, --calibrate or both")
    cfg = settings.emg
    out = Path(config.out_dir)
    artifacts = []
    summary = {}

    cal_f = Calibration(cfg.flexor_alpha0, cfg.flexor_alpha1)
    cal_e = Calibration(cfg.extensor_alpha0, cfg.extensor_alpha1)
    if opts.get("calibrate"):
        points = read_calibration_points(opts["calibrate"])
        if "flexor" in points:
            cal_f = calibrate(points["flexor"])
        if "extensor" in points:
            cal_e = calibrate(points["extensor"])
        table = pd.DataFrame([
            {"muscle": "flexor", "alpha0": cal_f.alpha0, "alpha1": cal_f.alpha1},
            {"muscle": "extensor", "alpha0": cal_e.alpha0, "alpha1": cal_e.alpha1},
        ])
        artifacts.append(write_csv(table, out / "calibration.csv"))
        summary["calibration"] = table.to_dict(orient="records")

    if opts.get("input"):
        t, raw_f, raw_e = read_emg(opts["input"])
        zero_phase = bool(opts.get("zero_phase")) or cfg.zero_phase
        env_f = envelope(raw_f, zero_phase).samples
        env_e = envelope(raw_e, zero_phase).samples
        tau_f = apply_calibration(env_f, cal_f)
        tau_e = apply_calibration(env_e, cal_e)
        parts = decompose(tau_f, tau_e)
        frame = pd.DataFrame({
            "t": t, "env_f": env_f, "env_e": env_e, "tau": parts.reciprocal, "u": parts.cocontraction,
        })
        artifacts.append(write_csv(frame, out / "emg_processed.csv"))
        summary["u_mean"] = trial_mean(parts.cocontraction, raw_f.rate, skip_s=settings.protocol.transient_skip_s)
        logger.info(f"EMG: {len(t)} samples at {raw_f.rate:g} Hz, mean cocontraction {summary['u_mean']:.4f}")

        if opts.get("spectrum"):
            spectra = {"tau": spectrum(parts.reciprocal, raw_f.rate), "u": spectrum(parts.cocontraction, raw_f.rate)}
            for name, spec_data in spectra.items():
                artifacts.append(write_csv(spec_data.to_frame(), out / f"spectrum_{name}.csv"))
                summary[f"peaks_{name}"] = spec_data.peaks.tolist()
            fig_spec, fig_frame = FigureService.spectrum_lines(spectra, figure_id="emg_spectra")
            artifacts.extend(FigureService.emit_figure(fig_spec, fig_frame, out / "figures"))

    return CommandResult(artifacts=artifacts, parameters={"emg": cfg.model_dump(), "options": {
        k: opts.get(k) for k in ("input", "calibrate", "spectrum", "zero_phase")}}, summary=summary)
