"""
protocol: a full simulated session (solo trials, then noise blocks) with
trial-by-trial cocontraction adaptation.
"""
import logging
from pathlib import Path

import numpy as np

from oie.commands import CommandResult, add_common, updated
from oie.datasets import write_csv, write_grid
from oie.errors import DomainError
from oie.schemas import RunConfig, Settings
from oie.services.figures import FigureService
from oie.services.protocol import observed_grid_from_dataset, run_protocol
from oie.services.reports import condition_summary, slope_report

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("protocol", help="simulate one participant's session")
    add_common(parser)
    parser.add_argument("--rule", choices=["oie", "tem"], default=None)
    parser.add_argument("--design", choices=["combined", "visual_only", "haptic_only", "separate"], default=None)
    parser.add_argument("--trials", dest="trials_per_block", type=int, default=None, help="trials per block")
    parser.add_argument("--solo", dest="solo_trials", type=int, default=None, help="solo trials before the blocks")
    parser.add_argument("--conditions", default=None, help="comma-separated subset, e.g. V0H0,V2H2")
    parser.add_argument("--duration", type=float, default=None, help="trial length in s")
    parser.add_argument("--last", dest="last_n", type=int, default=4, help="trials per block in the summary")
    parser.add_argument("--no-figures", action="store_true")


def execute(config: RunConfig, settings: Settings, seed: int) -> CommandResult:
    opts = config.options
    conditions = opts.get("conditions")
    target = updated(settings.protocol.target, duration=opts.get("duration"))
    spec = updated(
        settings.protocol,
        rule=opts.get("rule"),
        design=opts.get("design"),
        trials_per_block=opts.get("trials_per_block"),
        solo_trials=opts.get("solo_trials"),
        conditions=[c.strip() for c in conditions.split(",")] if conditions else None,
        target=target.model_dump(),
    )

    dataset = run_protocol(spec, seed)
    out = Path(config.out_dir)
    artifacts = [write_csv(dataset, out / "dataset.csv")]
    summary_info = {"trials": int(len(dataset))}

    inter = dataset[dataset["phase"] == "interaction"]
    if not inter.empty:
        summary = condition_summary(dataset, last_n=opts.get("last_n") or 4)
        artifacts.append(write_csv(summary, out / "condition_summary.csv"))
        try:
            artifacts.append(write_csv(slope_report(dataset, "u_mean"), out / "slopes.csv"))
        except DomainError as exc:
            logger.warning(f"Slope report skipped: {exc}")

        grid = observed_grid_from_dataset(dataset, "u_norm")
        if spec.design == "combined" and np.all(np.isfinite(grid)):
            artifacts.append(write_grid(grid, out / "observed_grid.csv"))
            errors = observed_grid_from_dataset(dataset, "error_deg")
            artifacts.append(write_grid(errors, out / "error_grid.csv", column="error_deg"))

        if not opts.get("no_figures"):
            figures = FigureService.condition_bars(summary) + [FigureService.adaptation_lines(dataset)]
            for fig_spec, frame in figures:
                artifacts.extend(FigureService.emit_figure(fig_spec, frame, out / "figures"))
        summary_info["final_u"] = float(inter.sort_values(["block", "trial"])["u_set"].iloc[-1])

    return CommandResult(artifacts=artifacts, parameters={"protocol": spec.model_dump()}, summary=summary_info)
