"""Flat key-value configuration with a fixed precedence chain.

Precedence, weakest first: built-in defaults, then the config file (a flat
JSON object), then command-line flags. The service additionally honors
MAILTRIAGE_* environment variables (see service.ServiceConfig).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError

DEFAULTS: dict[str, Any] = {
    "store_dir": "./triage-store",
    "model_path": "./triage-model.json",
    "host": "127.0.0.1",
    "port": 8033,
    "mode": "combined",
    "family": "linear_svm_ovr",
    "min_docs": 30,
    "k": 100,
    "seed": 0,
    "n_folds": 10,
    "console_dir": None,
    "relearn_interval_seconds": None,
}


def load_config(path: str | Path | None) -> dict[str, Any]:
    """Read one flat JSON object; unknown keys are rejected loudly."""
    if path is None:
        return {}
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a flat JSON object")
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
    return raw


def effective_config(
    file_values: Mapping[str, Any], flag_values: Mapping[str, Any]
) -> dict[str, Any]:
    """defaults < file < flags; flags with value None do not override."""
    merged = dict(DEFAULTS)
    merged.update(file_values)
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    return merged
