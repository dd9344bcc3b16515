"""
compare: OIE vs TEM on an observed grid, by residuals and normalized AIC.
"""
import logging
from pathlib import Path

import pandas as pd

from oie.commands import CommandResult, add_common
from oie.commands.fit import add_search_flags, search_config
from oie.datasets import read_error_grid, read_observed_grid, write_csv
from oie.models import HapticLevel, VisualLevel
from oie.schemas import RunConfig, Settings
from oie.services.figures import FigureService
from oie.services.identification import compare_models, identify
from oie.services.reports import fit_summary

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("compare", help="compare the OIE and TEM models on an observed grid")
    add_common(parser)
    add_search_flags(parser)
    parser.add_argument("--errors", required=True, help="tracking error grid CSV (visual_level, haptic_level, error_deg)")
    parser.add_argument("--criterion", choices=["aic", "aicc"], default="aic")
    parser.add_argument("--tem-normalization", choices=["minmax", "none"], default="minmax")


def execute(config: RunConfig, settings: Settings, seed: int) -> CommandResult:
    opts = config.options
    data = read_observed_grid(opts["input"])
    errors = read_error_grid(opts["errors"])
    pso = search_config(settings, opts, seed)

    fit = identify(data, pso, settings.compliance, u_max=settings.oie.u_max)
    report = compare_models(data, fit, settings.tem, errors, criterion=opts.get("criterion") or "aic",
                            tem_normalization=opts.get("tem_normalization") or "minmax")
    fit = fit.with_comparison(report)

    rows = [
        {"visual_level": v.value, "haptic_level": h.value, "u_observed": data.u[v.index, h.index],
         "u_oie": report.oie_predicted[v.index, h.index], "u_tem": report.tem_predicted[v.index, h.index],
         "residual_oie": report.residuals_oie[v.index, h.index], "residual_tem": report.residuals_tem[v.index, h.index]}
        for v in VisualLevel for h in HapticLevel
    ]
    scores = pd.DataFrame([
        {"model": "OIE", "rss": report.rss_oie, "aic_n": report.aic_oie, "aicc_n": report.aicc_oie},
        {"model": "TEM", "rss": report.rss_tem, "aic_n": report.aic_tem, "aicc_n": report.aicc_tem},
    ])

    out = Path(config.out_dir)
    text_path = out / "fit_summary.txt"
    text_path.parent.mkdir(parents=True, exist_ok=True)
    text_path.write_text(fit_summary(fit, report), encoding="utf-8")
    artifacts = [
        write_csv(pd.DataFrame(rows), out / "comparison.csv"),
        write_csv(scores, out / "model_scores.csv"),
        text_path,
    ]
    fig_spec, frame = FigureService.comparison_bars(data, report)
    artifacts.extend(FigureService.emit_figure(fig_spec, frame, out / "figures"))

    return CommandResult(
        artifacts=artifacts,
        parameters={"input": str(opts["input"]), "errors": str(opts["errors"]), "pso": pso.model_dump(),
                    "tem": settings.tem.model_dump(), "criterion": report.criterion,
                    "tem_normalization": opts.get("tem_normalization") or "minmax"},
        summary={"preferred": report.preferred, "aic_oie": report.aic_oie, "aic_tem": report.aic_tem,
                 "aicc_oie": report.aicc_oie, "aicc_tem": report.aicc_tem},
    )
