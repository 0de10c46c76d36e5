"""Server configuration: defaults < TOML file < environment < CLI flags.

Environment variables use the CLAUSELAB_ prefix with the field name
uppercased (CLAUSELAB_LISTEN, CLAUSELAB_STORE, ...).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from typing import Optional

try:
    import tomllib
except ImportError:                               # Python 3.10
    import tomli as tomllib

ENV_PREFIX = "CLAUSELAB_"


@dataclass
class Config:
    listen: str = "127.0.0.1:8080"
    store: str = "store"
    quota_max: int = 3
    idle_timeout: int = 600
    max_steps: int = 10_000_000
    max_clauses: int = 100_000
    time_limit: float = 60.0
    auth_file: Optional[str] = None
    profiles_dir: Optional[str] = None
    examples_dir: Optional[str] = None

    @property
    def host(self) -> str:
        return self.listen.rsplit(":", 1)[0] or "127.0.0.1"

    @property
    def port(self) -> int:
        return int(self.listen.rsplit(":", 1)[1])


_BOOL_TRUE = {"1", "true", "yes", "on"}


def _coerce(value: str, target_type):
    if target_type is int:
        return int(value)
    if target_type is float:
        return float(value)
    if target_type is bool:
        return value.strip().lower() in _BOOL_TRUE
    return value


def load_config(path: Optional[str] = None, env: Optional[dict] = None,
                overrides: Optional[dict] = None) -> Config:
    """Build a Config. `overrides` (typically CLI flags) wins over
    `env`, which wins over the TOML file at `path`."""
    cfg = Config()
    field_types = {f.name: f.type for f in fields(Config)}

    if path:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        for key, value in data.items():
            if key in field_types:
                setattr(cfg, key, value)

    env = os.environ if env is None else env
    for f in fields(Config):
        raw = env.get(ENV_PREFIX + f.name.upper())
        if raw is None:
            continue
        base = int if f.name in ("quota_max", "idle_timeout", "max_steps",
                                 "max_clauses") else \
            float if f.name == "time_limit" else str
        setattr(cfg, f.name, _coerce(raw, base))

    for key, value in (overrides or {}).items():
        if value is not None and key in field_types:
            setattr(cfg, key, value)

    return cfg
