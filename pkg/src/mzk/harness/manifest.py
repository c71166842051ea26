"""Run manifests: config echo, summary, and digests of emitted files."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Any

from .config import RunConfig, config_from_text, parse_pairs
from .io import atomic_write_text, format_float, sha256_file

MANIFEST_NAME = "manifest.txt"


def code_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format_float(v)
    if isinstance(v, (list, tuple)):
        return ", ".join(_fmt(x) for x in v)
    text = str(v)
    return text.replace("\n", " ")


@dataclass
class RunManifest:
    config: RunConfig
    code_version: str = field(default_factory=code_version)
    status: str = "running"
    wall_clock: float = math.nan
    summary: dict[str, Any] = field(default_factory=dict)
    files: dict[str, str] = field(default_factory=dict)
    started: float = field(default_factory=time.perf_counter, repr=False)

    def add_file(self, path: str | Path) -> None:
        path = Path(path)
        self.files[path.name] = sha256_file(path)

    def to_text(self) -> str:
        lines = [
            f"status = {self.status}",
            f"code_version = {self.code_version}",
            f"wall_clock = {_fmt(self.wall_clock)}",
        ]
        lines += [f"config.{k} = {v}" for k, v in self.config.items()]
        lines += [f"summary.{k} = {_fmt(v)}" for k, v in self.summary.items()]
        lines += [f"files.{name} = {digest}" for name, digest in sorted(self.files.items())]
        return "\n".join(lines) + "\n"

    def write(self, out_dir: str | Path, status: str) -> Path:
        self.status = status
        self.wall_clock = time.perf_counter() - self.started
        path = Path(out_dir) / MANIFEST_NAME
        atomic_write_text(path, self.to_text())
        return path


def read_manifest(path: str | Path) -> dict[str, str]:
    pairs, errs = parse_pairs(Path(path).read_text(encoding="utf-8"), str(path))
    if errs:
        raise ValueError("; ".join(errs))
    return {k: v for _, k, v in pairs}


def config_from_manifest(path: str | Path) -> RunConfig:
    """Rebuild the exact configuration echoed in a manifest."""
    return config_from_text(Path(path).read_text(encoding="utf-8"), str(path), prefix="config.")
