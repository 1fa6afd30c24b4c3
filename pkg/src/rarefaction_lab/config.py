"""
Configuration module for the rarefaction laboratory.
Centralizes environment settings and the layered experiment configuration:
model defaults < TOML file < command-line overrides.
"""

import hashlib
import json
import logging
import os
import tomllib
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ValidationError

from .errors import ConfigurationError
from .models import LabConfig

logger = logging.getLogger(__name__)


class Settings:
    """Application settings loaded from environment variables."""

    def __init__(self):
        self.OUT_ROOT = Path(os.getenv("LAB_OUT_ROOT", "./runs"))
        self.WORKERS = int(os.getenv("LAB_WORKERS", "1"))
        self.DEBUG = os.getenv("DEBUG", "false").lower() == "true"
        self.LOG_LEVEL = "DEBUG" if self.DEBUG else os.getenv("LAB_LOG_LEVEL", "INFO").upper()


def parse_override(item: str) -> tuple[list[str], Any]:
    """
    Parse one ``key=value`` override.

    Values are read as TOML literals (numbers, booleans, arrays, quoted strings);
    anything that does not parse is kept as a plain string.
    """
    if "=" not in item:
        raise ConfigurationError(f"override must have the form key=value, got '{item}'")
    key, raw = item.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigurationError(f"override has an empty key: '{item}'")
    raw = raw.strip()
    if raw in ("inf", "+inf"):
        value: Any = float("inf")
    else:
        try:
            value = tomllib.loads(f"value = {raw}")["value"]
        except tomllib.TOMLDecodeError:
            value = raw
    return key.split("."), value


def _apply_override(tree: dict[str, Any], path: list[str], value: Any) -> None:
    node = tree
    for part in path[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ConfigurationError("cannot override inside a scalar value", field=".".join(path))
        node = child
    node[path[-1]] = value


def _normalize_inf(tree: dict[str, Any]) -> None:
    # TOML has inf, but users often write the string "inf" in norm lists
    for key, value in tree.items():
        if isinstance(value, dict):
            _normalize_inf(value)
        elif isinstance(value, list):
            tree[key] = [float("inf") if item in ("inf", "+inf") else item for item in value]


def load_config(path: Path | None = None, overrides: list[str] | None = None) -> LabConfig:
    """
    Load and validate the experiment configuration.

    Args:
        path: Optional TOML file
        overrides: ``key=value`` items with dotted keys (``solver.eps=0.02``)

    Returns:
        Validated LabConfig

    Raises:
        ConfigurationError: unreadable file or invalid field (message names the field path)
    """
    tree: dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, "rb") as f:
                tree = tomllib.load(f)
            logger.debug(f"Loaded config file {path}")
        except OSError as e:
            raise ConfigurationError(f"cannot read config file {path}: {e}") from e
        except tomllib.TOMLDecodeError as e:
            raise ConfigurationError(f"malformed config file {path}: {e}") from e

    for item in overrides or []:
        key_path, value = parse_override(item)
        _apply_override(tree, key_path, value)

    _normalize_inf(tree)
    try:
        return LabConfig.model_validate(tree)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"]) or None
        raise ConfigurationError(first["msg"], field=field) from e


def config_hash(config: BaseModel) -> str:
    """
    SHA-256 of the canonical JSON dump of a validated configuration.

    Returns:
        Hex-encoded SHA256 hash string
    """
    payload = json.dumps(config.model_dump(mode="json", by_alias=True), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


# Create singleton instance
settings = Settings()
