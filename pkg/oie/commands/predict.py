"""
predict: OIE fixed-point cocontraction for the nine conditions and over a
(sigma_c, sigma_p) mesh.
"""
import logging
from pathlib import Path

import numpy as np

from oie.commands import CommandResult, add_common
from oie.datasets import write_csv, write_grid
from oie.schemas import RunConfig, Settings
from oie.services.adaptation import predict_from_effective, predict_grid, prediction_surface
from oie.services.figures import FigureService
from oie.services.noise_models import IDENTIFIED_SIGMA_H, IDENTIFIED_SIGMA_V

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("predict", help="predict cocontraction from the noise models")
    add_common(parser)
    parser.add_argument("--identified", "--table1", dest="identified", action="store_true",
                        help="use the identified effective noise values directly instead of the regressions")
    parser.add_argument("--n-c", type=int, default=30, help="mesh points along sigma_c")
    parser.add_argument("--n-p", type=int, default=30, help="mesh points along sigma_p")
    parser.add_argument("--sigma-c-max", type=float, default=60.0)
    parser.add_argument("--sigma-p-max", type=float, default=0.2)


def execute(config: RunConfig, settings: Settings, seed: int) -> CommandResult:
    opts = config.options
    params = settings.oie
    if opts.get("identified"):
        grid = predict_from_effective(np.array(IDENTIFIED_SIGMA_V), np.array(IDENTIFIED_SIGMA_H), params)
    else:
        grid = predict_grid(settings.visual, settings.haptic, params)
    logger.info(f"Predicted u* grid: min {grid.min():.4f}, max {grid.max():.4f}")

    surface = prediction_surface(settings.visual, settings.haptic, params, n_c=opts.get("n_c") or 30,
                                 n_p=opts.get("n_p") or 30, sigma_c_max=opts.get("sigma_c_max") or 60.0,
                                 sigma_p_max=opts.get("sigma_p_max") or 0.2)

    out = Path(config.out_dir)
    artifacts = [
        write_grid(grid, out / "u_star_grid.csv", column="u_star"),
        write_csv(surface.to_frame(), out / "surface.csv"),
    ]
    for fig_spec, frame in (FigureService.grid_heatmap(grid, "u_star_grid", "Predicted cocontraction per condition"),
                            FigureService.surface_heatmap(surface)):
        artifacts.extend(FigureService.emit_figure(fig_spec, frame, out / "figures"))

    return CommandResult(
        artifacts=artifacts,
        parameters={"identified": bool(opts.get("identified")), "oie": params.model_dump(),
                    "visual": settings.visual.model_dump(), "haptic": settings.haptic.model_dump(),
                    "mesh": [opts.get("n_c") or 30, opts.get("n_p") or 30]},
        summary={"u_star": grid.tolist()},
    )
