"""
Run manifests: what was run, with which seed, parameters and package
versions, and which files it produced.
"""
import hashlib
import json
import logging
from importlib import metadata
from pathlib import Path

from . import __version__
from .schemas import RunConfig

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
TRACKED_PACKAGES = ("numpy", "scipy", "pandas", "pydantic", "jinja2")


def package_versions() -> dict[str, str]:
    versions = {"oie": __version__}
    for name in TRACKED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def canonical_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)


def parameter_hash(parameters: dict) -> str:
    """sha256 over the canonical JSON of the resolved parameters."""
    return hashlib.sha256(canonical_json(parameters).encode("utf-8")).hexdigest()


def write_manifest(out_dir, config: RunConfig, seed: int, seed_generated: bool, parameters: dict,
                   artifacts: list, summary: dict | None = None) -> Path:
    """Write manifest.json into out_dir; artifact paths are stored relative to it."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = []
    for item in artifacts:
        path = Path(item)
        try:
            names.append(str(path.relative_to(out_dir)))
        except ValueError:
            names.append(str(path))

    manifest = {
        "command": config.command,
        "argv": list(config.argv),
        "seed": seed,
        "seed_generated": seed_generated,
        "config_path": config.config_path,
        "versions": package_versions(),
        "parameters": parameters,
        "parameter_hash": parameter_hash(parameters),
        "artifacts": sorted(names),
        "summary": summary or {},
    }
    path = out_dir / MANIFEST_NAME
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
    logger.info(f"Manifest written to {path} ({len(names)} artifacts)")
    return path
