"""
simulate: one closed-loop tracking trial under a noise condition.
"""
import logging
from pathlib import Path

from oie.commands import CommandResult, add_common, updated
from oie.datasets import write_trial
from oie.models import NoiseCondition
from oie.schemas import RunConfig, Settings
from oie.services.emg import decompose, trial_mean
from oie.services.trial_sim import simulate_trial, tracking_error

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("simulate", help="simulate one tracking trial")
    add_common(parser)
    parser.add_argument("--condition", default="V0H0", help="noise condition label, e.g. V1H2")
    parser.add_argument("--u", type=float, default=None, help="cocontraction (default: protocol.u_initial)")
    parser.add_argument("--solo", action="store_true", help="no coupling to the controller")
    parser.add_argument("--blind", action="store_true", help="no visual target (plan input 0)")
    parser.add_argument("--t0", type=float, default=None, help="phase offset in s (default: sampled)")
    parser.add_argument("--duration", type=float, default=None, help="trial length in s")


def execute(config: RunConfig, settings: Settings, seed: int) -> CommandResult:
    opts = config.options
    condition = NoiseCondition.from_label(opts.get("condition") or "V0H0")
    u = settings.protocol.u_initial if opts.get("u") is None else float(opts["u"])
    target = updated(settings.target, duration=opts.get("duration"))

    rec = simulate_trial(condition, u, settings.plant, seed, target=target,
                         coupled=not opts.get("solo"), vision=not opts.get("blind"), t0=opts.get("t0"))
    error = tracking_error(rec)
    parts = decompose(rec.emg_f, rec.emg_e)
    u_mean = trial_mean(parts.cocontraction, rec.rate, skip_s=settings.protocol.transient_skip_s)
    logger.info(f"Trial {condition.label}: tracking error {error:.3f} deg, mean cocontraction {u_mean:.4f}")

    path = write_trial(rec, Path(config.out_dir) / "trial.csv")
    return CommandResult(
        artifacts=[path],
        parameters={
            "condition": condition.label, "u": u, "t0": rec.t0, "coupled": rec.coupled, "vision": rec.vision,
            "plant": settings.plant.model_dump(), "target": target.model_dump(),
        },
        summary={"tracking_error_deg": error, "u_mean": u_mean},
    )
