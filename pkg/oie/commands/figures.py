"""
figures: re-render the standard figures from CSV outputs of other commands.
"""
import logging
from pathlib import Path

import pandas as pd

from oie.commands import CommandResult, add_common
from oie.datasets import read_csv, read_dataset, read_observed_grid
from oie.errors import UsageError
from oie.schemas import RunConfig, Settings
from oie.services.figures import FigureService
from oie.services.reports import condition_summary

logger = logging.getLogger(__name__)

SURFACE_COLUMNS = ["sigma_c_mm", "sigma_p_nm", "u_star"]


def register(subparsers) -> None:
    parser = subparsers.add_parser("figures", help="render SVG figures (with backing CSV) from saved results")
    add_common(parser)
    parser.add_argument("--dataset", default=None, help="protocol dataset.csv: error and cocontraction bars")
    parser.add_argument("--grid", default=None, help="observed grid CSV: heatmap")
    parser.add_argument("--surface", default=None, help="surface.csv from predict: heatmap")
    parser.add_argument("--last", dest="last_n", type=int, default=4)


def execute(config: RunConfig, settings: Settings, seed: int) -> CommandResult:
    opts = config.options
    figures = []
    if opts.get("dataset"):
        dataset = read_dataset(opts["dataset"])
        figures += FigureService.condition_bars(condition_summary(dataset, last_n=opts.get("last_n") or 4))
        figures.append(FigureService.adaptation_lines(dataset))
    if opts.get("grid"):
        figures.append(FigureService.grid_heatmap(read_observed_grid(opts["grid"]).u, "observed_grid",
                                                  "Observed normalized cocontraction"))
    if opts.get("surface"):
        table = read_csv(opts["surface"], SURFACE_COLUMNS)
        frame = pd.DataFrame({"x": table["sigma_c_mm"], "y": table["sigma_p_nm"], "value": table["u_star"]})
        figures.append((FigureService.surface_spec(), frame))
    if not figures:
        raise UsageError("figures needs at least one of --dataset, --grid, --surface")

    out = Path(config.out_dir)
    artifacts = []
    for fig_spec, frame in figures:
        artifacts.extend(FigureService.emit_figure(fig_spec, frame, out))
    return CommandResult(artifacts=artifacts, parameters={k: opts.get(k) for k in ("dataset", "grid", "surface")},
                         summary={"figures": [spec.figure_id for spec, _ in figures]})
