"""
CLI subcommands. Each module exposes `register(subparsers)` to declare its
flags and `execute(config, settings, seed) -> CommandResult`.
"""
from dataclasses import dataclass, field
from pathlib import Path

from pydantic import BaseModel, ValidationError

from oie.errors import UsageError


@dataclass
class CommandResult:
    artifacts: list[Path] = field(default_factory=list)
    parameters: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


def updated(model: BaseModel, **changes) -> BaseModel:
    """Revalidated copy of a frozen settings model; None values leave a field unchanged."""
    changes = {k: v for k, v in changes.items() if v is not None}
    if not changes:
        return model
    try:
        return type(model).model_validate({**model.model_dump(), **changes})
    except ValidationError as exc:
        problems = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in exc.errors())
        raise UsageError("Invalid command-line value", detail=problems) from exc


def add_common(parser) -> None:
    parser.add_argument("--config", dest="config_path", metavar="PATH", help="key = value configuration file")
    parser.add_argument("--seed", type=int, metavar="N", help="root seed (drawn from OS entropy if omitted)")
    parser.add_argument("--out", dest="out_dir", default="out", metavar="DIR", help="output directory")
    parser.add_argument("--set", dest="overrides", action="append", metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")
