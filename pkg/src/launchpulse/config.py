"""Run configuration with the documented precedence: CLI > env > config file > defaults."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from datetime import datetime
from pathlib import Path

from .hn import DEFAULT_KEYWORDS
from .learn import DEFAULT_GBT
from .util import parse_utc

ENV_CACHE_DIR = "LAUNCHPULSE_CACHE_DIR"
ENV_GITHUB_TOKEN = "GITHUB_TOKEN"


def parse_flat_config(text: str) -> dict[str, str]:
    """Parse a flat ``key = value`` document; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


@dataclass
class RunConfig:
    date_from: datetime = field(default_factory=lambda: parse_utc("2024-01-01T00:00:00Z"))
    date_to: datetime = field(default_factory=lambda: parse_utc("2026-01-01T00:00:00Z"))
    keywords: tuple[str, ...] = DEFAULT_KEYWORDS
    cache_dir: Path = Path("data/cache")
    data_dir: Path = Path("data")
    out_dir: Path = Path("out")
    seed: int = 7
    rate_budget: int = 30  # requests per minute per host
    max_pages: int = 400  # stargazer pagination cap
    hn_page_limit: int = 20
    offline: bool = False
    workers: int = 4
    github_token: str | None = None
    gbt_n_trees: int = DEFAULT_GBT["n_trees"]
    gbt_learning_rate: float = DEFAULT_GBT["learning_rate"]
    gbt_max_depth: int = DEFAULT_GBT["max_depth"]
    gbt_min_leaf: int = DEFAULT_GBT["min_leaf"]
    importance_repeats: int = 20
    split_ratio: float = 0.8


_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def _convert(name: str, value: str):
    if name in ("date_from", "date_to"):
        return parse_utc(value if "T" in value else value + "T00:00:00Z")
    if name == "keywords":
        return tuple(k.strip() for k in value.split(",") if k.strip())
    if name in ("cache_dir", "data_dir", "out_dir"):
        return Path(value)
    if name == "offline":
        lowered = value.lower()
        if lowered in _BOOL_TRUE:
            return True
        if lowered in _BOOL_FALSE:
            return False
        raise ValueError(f"bad boolean for offline: {value!r}")
    if name in ("gbt_learning_rate", "split_ratio"):
        return float(value)
    if name == "github_token":
        return value or None
    return int(value)


def build_config(
    config_path: Path | None = None,
    overrides: dict | None = None,
    environ: dict | None = None,
) -> RunConfig:
    """Layer the configuration sources onto the defaults.

    `overrides` holds already-typed CLI values; config-file and env values
    are strings converted per field.
    """
    environ = os.environ if environ is None else environ
    cfg = RunConfig()
    known = {f.name for f in fields(RunConfig)}

    if config_path is not None:
        text = Path(config_path).read_text(encoding="utf-8")
        for key, value in parse_flat_config(text).items():
            if key not in known:
                raise ValueError(f"unknown config key in {config_path}: {key}")
            setattr(cfg, key, _convert(key, value))

    if ENV_CACHE_DIR in environ:
        cfg.cache_dir = Path(environ[ENV_CACHE_DIR])
    if environ.get(ENV_GITHUB_TOKEN):
        cfg.github_token = environ[ENV_GITHUB_TOKEN]

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in known:
            raise ValueError(f"unknown config override: {key}")
        setattr(cfg, key, value)

    if cfg.date_from >= cfg.date_to:
        raise ValueError("--from must precede --to")
    return cfg
