#!/usr/bin/env python3
"""
Configuration management for wdrc.
Handles numerical tolerances and user preferences stored in ~/.wdrc/config.json.
"""

import os
import json
from dataclasses import dataclass, asdict, fields, replace
from pathlib import Path
from typing import Optional, Dict, Any, Iterable

from .errors import ConfigError

OUTPUT_DIR_ENV = 'WDRC_OUT'
DEFAULT_OUTPUT_DIR = 'wdrc_out'


def get_config_dir() -> Path:
    """Get the wdrc config directory (~/.wdrc, or $WDRC_HOME)"""
    base = os.environ.get('WDRC_HOME')
    config_dir = Path(base) if base else Path.home() / '.wdrc'
    config_dir.mkdir(parents=True, exist_ok=True)
    return config_dir


def get_config_path() -> Path:
    """Get the config file path"""
    return get_config_dir() / 'config.json'


def load_config() -> Dict[str, Any]:
    """Load configuration from file"""
    config_path = get_config_path()
    if config_path.exists():
        try:
            with open(config_path, 'r') as f:
                return json.load(f)
        except (json.JSONDecodeError, IOError):
            return {}
    return {}


def get_config_value(key: str, default: Any = None) -> Any:
    """Get a specific config value"""
    config = load_config()
    return config.get(key, default)


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances shared by validation and the solvers"""
    psd_rel: float = 1e-9        # psd_tol = psd_rel * (1 + trace)
    pd_tol: float = 1e-12        # R must have min eigenvalue above this
    sym_tol: float = 1e-9        # relative asymmetry accepted before symmetrizing
    cond_max: float = 1e14       # condition number treated as singular
    iter_tol: float = 1e-10      # value-iteration stopping tolerance
    max_iter: int = 100000
    bisection_tol: float = 1e-6  # relative width of the lambda* bracket

    def psd_tol(self, trace: float) -> float:
        """Scale-aware PSD tolerance for a matrix with the given trace"""
        return self.psd_rel * (1.0 + abs(trace))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def parse_overrides(items: Optional[Iterable[str]]) -> Dict[str, str]:
    """Parse `key=value` strings from the command line"""
    overrides = {}
    for item in items or []:
        if '=' not in item:
            raise ConfigError(f"Tolerance override must look like key=value, got '{item}'")
        key, value = item.split('=', 1)
        overrides[key.strip()] = value.strip()
    return overrides


def load_tolerances(overrides: Optional[Dict[str, Any]] = None) -> Tolerances:
    """
    Build the effective tolerances.

    Priority:
    1. Explicit overrides (e.g. --tol psd_rel=1e-8)
    2. "tolerances" block of ~/.wdrc/config.json
    3. Built-in defaults
    """
    known = {f.name for f in fields(Tolerances)}
    merged: Dict[str, Any] = {}
    merged.update(get_config_value('tolerances', {}) or {})
    merged.update(overrides or {})

    values = {}
    for key, raw in merged.items():
        if key not in known:
            raise ConfigError(f"Unknown tolerance '{key}'. Known: {', '.join(sorted(known))}")
        try:
            values[key] = int(raw) if key == 'max_iter' else float(raw)
        except (TypeError, ValueError):
            raise ConfigError(f"Tolerance '{key}' must be numeric, got {raw!r}")
        if values[key] <= 0:
            raise ConfigError(f"Tolerance '{key}' must be positive")
    return replace(Tolerances(), **values)


def default_output_dir(explicit: Optional[str] = None) -> Path:
    """Resolve the output directory: flag, then $WDRC_OUT, then config, then ./wdrc_out"""
    if explicit:
        return Path(explicit)
    env = os.environ.get(OUTPUT_DIR_ENV)
    if env:
        return Path(env)
    return Path(get_config_value('output_dir', DEFAULT_OUTPUT_DIR))


DEFAULT_TOLERANCES = Tolerances()
