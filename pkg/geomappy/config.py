"""Settings for geomappy runs.

Settings come from an optional `config.json` (see `config.sample.json`) and are
overridden by environment variables:

    GEOMAPPY_CACHE_DIR      directory for fetched entities and downloaded geometry
    GEOMAPPY_KB_ENDPOINT    base url of the entity data endpoint
    GEOMAPPY_KB_TIMEOUT     request timeout in seconds
    GEOMAPPY_KB_REMOTE      truthy to allow remote fetches of entities missing from the snapshot

Copyright (c) 2026 geomappy contributors
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, ValidationError, field_validator

from .errors import ConfigError

logger = logging.getLogger(__name__)

DEFAULT_ENDPOINT = "https://www.wikidata.org/wiki/Special:EntityData"
DEFAULT_CACHE_DIR = os.path.join(os.path.expanduser("~"), ".cache", "geomappy")
TRUTHY = {"1", "true", "yes", "on"}


class KbSettings(BaseModel):
    endpoint: str = DEFAULT_ENDPOINT
    timeout: float = Field(default=10.0, gt=0)
    cache_dir: str = DEFAULT_CACHE_DIR
    remote: bool = False

    @field_validator("cache_dir")
    @classmethod
    def _expand(cls, value: str) -> str:
        return os.path.expanduser(value)


class Settings(BaseModel):
    kb: KbSettings = Field(default_factory=KbSettings)
    registry: Optional[str] = None


def load_settings(path: Optional[str] = None, environ: Optional[Dict[str, str]] = None) -> Settings:
    """Loads the settings file (if any) and applies environment overrides.

    Args:
        path (str, optional): Path to a `config.json`. Missing files are an error only when given explicitly.
        environ (dict, optional): Environment to read, defaults to `os.environ`.

    Returns:
        Settings: The merged settings.
    """
    environ = os.environ if environ is None else environ
    data: Dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as ex:
            raise ConfigError(f"cannot read config {path}: {ex}")

    kb = dict(data.get("kb") or {})
    if environ.get("GEOMAPPY_CACHE_DIR"):
        kb["cache_dir"] = environ["GEOMAPPY_CACHE_DIR"]
    if environ.get("GEOMAPPY_KB_ENDPOINT"):
        kb["endpoint"] = environ["GEOMAPPY_KB_ENDPOINT"]
    if environ.get("GEOMAPPY_KB_TIMEOUT"):
        kb["timeout"] = environ["GEOMAPPY_KB_TIMEOUT"]
    if "GEOMAPPY_KB_REMOTE" in environ:
        kb["remote"] = environ["GEOMAPPY_KB_REMOTE"].strip().lower() in TRUTHY

    try:
        return Settings(kb=KbSettings(**kb), registry=data.get("registry"))
    except ValidationError as ex:
        raise ConfigError(f"invalid settings: {ex}")


class RunConfig(BaseModel):
    """Validated flags of a single cli invocation."""

    subcommand: str
    inputs: List[str] = Field(default_factory=list)
    output: Optional[str] = None
    kb: Optional[str] = None
    registry: Optional[str] = None
    profile: Optional[str] = None
    factor_table: Optional[str] = None
    top_k: int = Field(default=1, ge=1)
    threshold: float = Field(default=0.0, ge=0)
    features: List[str] = Field(default_factory=list)
    folds: int = Field(default=5, ge=2)
    seed: int = Field(default=17, ge=0)
    p: float = Field(default=0.9, gt=0, lt=1)
    k: List[int] = Field(default_factory=lambda: [1])
    workers: int = Field(default=1, ge=1)
    reproducible: bool = False

    @field_validator("inputs")
    @classmethod
    def _inputs_exist(cls, value: List[str]) -> List[str]:
        for path in value:
            if path != "-" and not Path(path).exists():
                raise ValueError(f"input not found: {path}")
        return value

    @field_validator("kb", "registry", "profile", "factor_table")
    @classmethod
    def _path_exists(cls, value: Optional[str]) -> Optional[str]:
        if value is not None and not Path(value).exists():
            raise ValueError(f"file not found: {value}")
        return value

    @field_validator("features")
    @classmethod
    def _no_empty_feature_sets(cls, value: List[str]) -> List[str]:
        if any(not expr for expr in value):
            raise ValueError("empty feature set in --features")
        return value

    @field_validator("k")
    @classmethod
    def _positive_depths(cls, value: List[int]) -> List[int]:
        if not value or any(k < 1 for k in value):
            raise ValueError("k must be a list of integers >= 1")
        return value

    @classmethod
    def validate_args(cls, **kwargs) -> "RunConfig":
        """Builds the config, turning validation failures into a `ConfigError`."""
        try:
            return cls(**kwargs)
        except ValidationError as ex:
            messages = "; ".join(err["msg"] for err in ex.errors())
            raise ConfigError(messages)
