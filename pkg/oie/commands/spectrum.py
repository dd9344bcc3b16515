"""
spectrum: amplitude spectra and peak frequencies of a recorded column or of
the model signals (target motion, haptic perturbation, a simulated trial).
"""
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from oie.commands import CommandResult, add_common
from oie.datasets import read_series, write_csv
from oie.errors import UsageError
from oie.models import HapticLevel, NoiseCondition
from oie.schemas import RunConfig, Settings
from oie.services.emg import decompose, spectrum
from oie.services.figures import FigureService
from oie.services.trial_sim import perturbation_torque, simulate_trial, target_position

logger = logging.getLogger(__name__)

SIGNALS = ("target", "perturbation", "trial")


def register(subparsers) -> None:
    parser = subparsers.add_parser("spectrum", help="amplitude spectrum and peaks of a signal")
    add_common(parser)
    parser.add_argument("--input", default=None, help="CSV with a uniform t column")
    parser.add_argument("--column", default=None, help="column of --input to analyse")
    parser.add_argument("--signal", choices=SIGNALS, default=None, help="analyse a model signal instead")
    parser.add_argument("--haptic", default="H2", help="perturbation level for --signal perturbation")
    parser.add_argument("--condition", default="V0H2", help="condition for --signal trial")
    parser.add_argument("--u", type=float, default=None, help="cocontraction for --signal trial")
    parser.add_argument("--threshold", type=float, default=3.0, help="peak threshold as a multiple of the median")


def _model_series(signal: str, opts: dict, settings: Settings, seed: int) -> tuple[dict[str, np.ndarray], float]:
    target = settings.target
    rate = 1.0 / settings.plant.frame_dt
    t = np.arange(int(round(target.duration * rate))) / rate
    if signal == "target":
        return {"target": np.asarray(target_position(t, 0.0, target))}, rate
    if signal == "perturbation":
        label = (opts.get("haptic") or "H2").strip().upper()
        try:
            level = HapticLevel(label)
        except ValueError:
            raise UsageError(f"Unknown haptic level '{label}'", detail="expected H0, H1 or H2") from None
        return {"perturbation": np.asarray(perturbation_torque(t, level.sigma_p, target.duration))}, rate

    condition = NoiseCondition.from_label(opts.get("condition") or "V0H2")
    u = settings.protocol.u_initial if opts.get("u") is None else float(opts["u"])
    rec = simulate_trial(condition, u, settings.plant, seed, target=target)
    parts = decompose(rec.emg_f, rec.emg_e)
    return {"reciprocal": parts.reciprocal, "cocontraction": parts.cocontraction}, rec.rate


def execute(config: RunConfig, settings: Settings, seed: int) -> CommandResult:
    opts = config.options
    threshold = opts.get("threshold") or 3.0
    if opts.get("signal"):
        series, rate = _model_series(opts["signal"], opts, settings, seed)
    elif opts.get("input") and opts.get("column"):
        values, rate = read_series(opts["input"], opts["column"])
        series = {opts["column"]: values}
    else:
        raise UsageError("spectrum needs --signal, or --input together with --column")

    out = Path(config.out_dir)
    spectra = {}
    artifacts = []
    peaks = []
    for name, values in series.items():
        spectra[name] = spectrum(values, rate, threshold=threshold)
        artifacts.append(write_csv(spectra[name].to_frame(), out / f"spectrum_{name}.csv"))
        peaks.extend({"series": name, "freq_hz": f} for f in spectra[name].peaks)
        logger.info(f"Spectrum of {name}: peaks at {np.round(spectra[name].peaks, 3).tolist()} Hz")
    artifacts.append(write_csv(pd.DataFrame(peaks, columns=["series", "freq_hz"]), out / "peaks.csv"))

    fig_spec, frame = FigureService.spectrum_lines(spectra)
    artifacts.extend(FigureService.emit_figure(fig_spec, frame, out / "figures"))
    return CommandResult(
        artifacts=artifacts,
        parameters={"signal": opts.get("signal"), "input": opts.get("input"), "column": opts.get("column"),
                    "rate": rate, "threshold": threshold},
        summary={name: s.peaks.tolist() for name, s in spectra.items()},
    )
