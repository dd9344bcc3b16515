"""
Configuration loading.

A config file holds `key = value` lines. Noise-model coefficients use bare
keys (alpha_v, beta_v, alpha_p, beta_p, delta_p, c0, c1, c2); everything else
is `section.field` with section one of oie, tem, plant, target, protocol, pso,
emg. Values are validated by the pydantic models in schemas.py.
"""
import logging
import os
from pathlib import Path

from pydantic import BaseModel, ValidationError

from .errors import InputSchemaError, MissingInputError
from .schemas import (
    ComplianceModel,
    EmgSettings,
    HapticRegression,
    OieParams,
    PlantConfig,
    ProtocolSpec,
    PsoConfig,
    Settings,
    TargetSpec,
    TemParams,
    VisualRegression,
)

logger = logging.getLogger(__name__)

LOG_LEVEL = os.getenv("OIE_LOG_LEVEL", "INFO").upper()

BARE_KEYS = {
    "alpha_v": "visual", "beta_v": "visual",
    "alpha_p": "haptic", "beta_p": "haptic", "delta_p": "haptic",
    "c0": "compliance", "c1": "compliance", "c2": "compliance",
}
SECTIONS: dict[str, type[BaseModel]] = {
    "oie": OieParams,
    "tem": TemParams,
    "plant": PlantConfig,
    "target": TargetSpec,
    "protocol": ProtocolSpec,
    "pso": PsoConfig,
    "emg": EmgSettings,
}
# nested models are filled from their own sections
NESTED = {"compliance", "target", "plant", "oie", "tem", "visual", "haptic"}


def parse_value(raw: str):
    """Comma-separated values become a list, none/null becomes None; the rest stays text for pydantic."""
    text = raw.strip()
    if text.lower() in ("none", "null"):
        return None
    if "," in text:
        return [part.strip() for part in text.split(",") if part.strip()]
    return text


def parse_lines(lines, source: str = "<config>") -> dict[str, object]:
    entries: dict[str, object] = {}
    for number, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise InputSchemaError(f"{source}:{number}: expected 'key = value'", detail=line.rstrip())
        key, value = (part.strip() for part in text.split("=", 1))
        if not key:
            raise InputSchemaError(f"{source}:{number}: empty key")
        if key in entries:
            logger.warning(f"{source}:{number}: '{key}' set twice, last value wins")
        entries[key] = parse_value(value)
    return entries


def load_config(path) -> dict[str, object]:
    path = Path(path)
    if not path.is_file():
        raise MissingInputError(f"Config file not found: {path}")
    entries = parse_lines(path.read_text(encoding="utf-8").splitlines(), source=path.name)
    logger.info(f"Loaded {len(entries)} settings from {path}")
    return entries


def parse_overrides(items: list[str] | None) -> dict[str, object]:
    """`--set key=value` pairs, same syntax as config lines."""
    return parse_lines(items or [], source="--set")


def _group(entries: dict[str, object]) -> dict[str, dict[str, object]]:
    groups: dict[str, dict[str, object]] = {name: {} for name in ("visual", "haptic", "compliance", *SECTIONS)}
    for key, value in entries.items():
        if key in BARE_KEYS:
            groups[BARE_KEYS[key]][key] = value
            continue
        section, _, field = key.partition(".")
        if section not in SECTIONS or not field:
            raise InputSchemaError(f"Unknown configuration key '{key}'")
        if field in NESTED or field not in SECTIONS[section].model_fields:
            raise InputSchemaError(f"Unknown configuration key '{key}'",
                                   detail=f"fields of {section}: {sorted(set(SECTIONS[section].model_fields) - NESTED)}")
        groups[section][field] = value
    return groups


def build_settings(entries: dict[str, object] | None = None) -> Settings:
    """Validated settings; nested copies (protocol.plant, oie.compliance...) share the section values."""
    groups = _group(entries or {})
    try:
        visual = VisualRegression(**groups["visual"])
        haptic = HapticRegression(**groups["haptic"])
        compliance = ComplianceModel(**groups["compliance"])
        oie = OieParams(**groups["oie"], compliance=compliance)
        tem = TemParams(**groups["tem"])
        plant = PlantConfig(**groups["plant"])
        target = TargetSpec(**groups["target"])
        protocol = ProtocolSpec(**groups["protocol"], target=target, plant=plant, oie=oie, tem=tem,
                                visual=visual, haptic=haptic)
        return Settings(
            visual=visual, haptic=haptic, compliance=compliance, oie=oie, tem=tem, plant=plant,
            target=target, pso=PsoConfig(**groups["pso"]), emg=EmgSettings(**groups["emg"]), protocol=protocol,
        )
    except ValidationError as exc:
        problems = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in exc.errors())
        raise InputSchemaError("Invalid configuration", detail=problems) from exc


def settings_from(path=None, overrides: list[str] | None = None) -> Settings:
    entries = load_config(path) if path else {}
    entries.update(parse_overrides(overrides))
    return build_settings(entries)
