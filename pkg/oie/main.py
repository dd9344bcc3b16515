"""
Command-line entry point: `python -m oie <command> [flags]`.
"""
import argparse
import logging
import sys

from pydantic import ValidationError

from . import __version__
from .audit import write_manifest
from .commands import compare, emg, figures, fit, predict, protocol, simulate, spectrum
from .config import LOG_LEVEL, settings_from
from .errors import OieError, UsageError
from .schemas import RunConfig
from .seeding import resolve_seed

logger = logging.getLogger("oie")

COMMANDS = {
    "simulate": simulate,
    "protocol": protocol,
    "fit": fit,
    "predict": predict,
    "compare": compare,
    "emg": emg,
    "spectrum": spectrum,
    "figures": figures,
}
COMMON = ("command", "seed", "config_path", "out_dir")


def configure_logging(level: str = LOG_LEVEL) -> None:
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="[%(asctime)s] %(levelname)s %(name)s: %(message)s",
        datefmt="%H:%M:%S",
    )
    logging.getLogger("oie").setLevel(getattr(logging, level, logging.INFO))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oie", description="Optimal information and effort model of cocontraction")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    for module in COMMANDS.values():
        module.register(subparsers)
    return parser


def run(config: RunConfig) -> int:
    """Run one command and write its manifest. Library errors propagate."""
    settings = settings_from(config.config_path, config.options.get("overrides"))
    seed, generated = resolve_seed(config.seed)
    logger.info(f"Running '{config.command}' with seed {seed} into {config.out_dir}")

    result = COMMANDS[config.command].execute(config, settings, seed)
    write_manifest(config.out_dir, config, seed, generated, result.parameters, result.artifacts, result.summary)
    logger.info(f"'{config.command}' finished: {len(result.artifacts)} files written")
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse reports usage errors with status 2
        return int(exc.code or 0)

    configure_logging()
    options = {k: v for k, v in vars(ns).items() if k not in COMMON}
    try:
        try:
            config = RunConfig(command=ns.command, seed=ns.seed, config_path=ns.config_path, out_dir=ns.out_dir,
                               options=options, argv=argv)
        except ValidationError as exc:
            raise UsageError("Invalid arguments", detail="; ".join(err["msg"] for err in exc.errors())) from exc
        return run(config)
    except OieError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
