"""
fit: identify effective noise values and the effort ratio from an observed
cocontraction grid.
"""
import logging
from pathlib import Path

from oie.commands import CommandResult, add_common, updated
from oie.datasets import read_observed_grid, write_csv, write_grid
from oie.schemas import PsoConfig, RunConfig, Settings
from oie.seeding import derive_seed
from oie.services.figures import FigureService
from oie.services.identification import identify
from oie.services.reports import fit_summary, fit_table

logger = logging.getLogger(__name__)


def add_search_flags(parser) -> None:
    parser.add_argument("--input", required=True, help="observed grid CSV (visual_level, haptic_level, u_normalized)")
    parser.add_argument("--bounds", nargs=2, type=float, metavar=("LOW", "HIGH"), default=None)
    parser.add_argument("--swarm", dest="swarm_size", type=int, default=None)
    parser.add_argument("--iters", dest="iterations", type=int, default=None)
    parser.add_argument("--grid-points", type=int, default=None)
    parser.add_argument("--no-polish", action="store_true")


def search_config(settings: Settings, opts: dict, seed: int) -> PsoConfig:
    pso_seed = settings.pso.seed if settings.pso.seed is not None else derive_seed(seed, "pso")
    return updated(
        settings.pso,
        bounds=tuple(opts["bounds"]) if opts.get("bounds") else None,
        swarm_size=opts.get("swarm_size"),
        iterations=opts.get("iterations"),
        grid_points=opts.get("grid_points"),
        polish=False if opts.get("no_polish") else None,
        seed=pso_seed,
    )


def register(subparsers) -> None:
    parser = subparsers.add_parser("fit", help="identify effective noise values from an observed grid")
    add_common(parser)
    add_search_flags(parser)


def execute(config: RunConfig, settings: Settings, seed: int) -> CommandResult:
    opts = config.options
    data = read_observed_grid(opts["input"])
    pso = search_config(settings, opts, seed)
    fit = identify(data, pso, settings.compliance, u_max=settings.oie.u_max)

    out = Path(config.out_dir)
    report = out / "fit_summary.txt"
    report.parent.mkdir(parents=True, exist_ok=True)
    report.write_text(fit_summary(fit), encoding="utf-8")
    artifacts = [
        write_csv(fit_table(fit), out / "fit.csv"),
        write_grid(fit.predicted, out / "predicted_grid.csv", column="u_predicted"),
        report,
    ]
    fig_spec, frame = FigureService.grid_heatmap(fit.predicted, "fit_predicted", "Fitted cocontraction")
    artifacts.extend(FigureService.emit_figure(fig_spec, frame, out / "figures"))

    return CommandResult(
        artifacts=artifacts,
        parameters={"input": str(opts["input"]), "pso": pso.model_dump(), "compliance": settings.compliance.model_dump(),
                    "u_max": settings.oie.u_max},
        summary={"gamma_star": fit.gamma_star, "kkt_residual": fit.kkt_residual, "rss": fit.rss,
                 "aic_oie": fit.aic_oie, "xi_star": fit.xi_star.tolist(), "degenerate": fit.degenerate},
    )
