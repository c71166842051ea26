"""Configuration, persistence and experiment drivers."""

from .config import ConfigError, RunConfig, config_from_text, load_config, preset
from .io import Checkpoint, read_checkpoint, write_checkpoint
from .manifest import RunManifest

__all__ = [
    "Checkpoint",
    "ConfigError",
    "RunConfig",
    "RunManifest",
    "config_from_text",
    "load_config",
    "preset",
    "read_checkpoint",
    "write_checkpoint",
]
