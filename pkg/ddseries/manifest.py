"""
Run manifests written next to every data file
"""

from importlib import metadata
from pathlib import Path
from typing import Any

from pydantic import BaseModel, Field

from . import logger
from .parameters import TruncationPolicy

PACKAGE_NAME = "ddseries"


def code_version() -> str:
    try:
        return metadata.version(PACKAGE_NAME)
    except metadata.PackageNotFoundError:
        return "unknown"


class RunManifest(BaseModel, extra="forbid"):
    subcommand: str = Field(title="Subcommand")
    parameters: dict[str, Any] = Field(
        default={},
        title="Parameters",
        description="Subcommand options as given on the command line",
    )
    policy: TruncationPolicy = Field(title="Truncation policy")
    seed: int = Field(title="Seed")
    code_version: str = Field(default_factory=code_version, title="Code version")
    outputs: list[str] = Field(default=[], title="Data files")
    wall_time: float = Field(default=0.0, ge=0, title="Wall time", description="Seconds")


def manifest_path(out: Path) -> Path:
    return out.with_name(f"{out.name}.manifest.json")


def write_manifest(manifest: RunManifest, out: Path) -> Path:
    path = manifest_path(out)
    path.write_text(manifest.model_dump_json(indent=4) + "\n", encoding="utf-8")
    logger.debug("== Manifest written to %s", path)
    return path
