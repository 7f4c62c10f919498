"""
Run configuration: flat JSON with dotted keys, `--set key=value` overrides and
the SEMSOFT_SEED environment default.
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Optional

from pydantic import ValidationError

from semsoft.errors import ConfigError
from semsoft.models import RunConfig

logger = logging.getLogger(__name__)

SEED_ENV_VAR = "SEMSOFT_SEED"


def expand_dotted(flat: dict[str, Any]) -> dict[str, Any]:
    """Turn {"train.epochs": 5} into {"train": {"epochs": 5}}."""
    nested: dict[str, Any] = {}
    for key in sorted(flat):
        parts = key.split(".")
        node = nested
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError("key is both a value and a section", key=key)
            node = child
        if isinstance(node.get(parts[-1]), dict):
            raise ConfigError("key is both a value and a section", key=key)
        node[parts[-1]] = flat[key]
    return nested


def flatten(config: RunConfig) -> dict[str, Any]:
    """Dotted-key view of a RunConfig, as echoed into sidecars."""
    flat: dict[str, Any] = {}

    def walk(prefix: str, value: Any) -> None:
        if isinstance(value, dict):
            for key in sorted(value):
                walk(f"{prefix}.{key}" if prefix else key, value[key])
        else:
            flat[prefix] = value

    walk("", config.model_dump(mode="json"))
    return flat


def parse_override(item: str) -> tuple[str, Any]:
    """Parse `key=value`; the value is read as JSON, else kept as a string."""
    key, sep, raw = item.partition("=")
    if not sep or not key:
        raise ConfigError(f"override '{item}' is not of the form key=value")
    try:
        return key, json.loads(raw)
    except json.JSONDecodeError:
        return key, raw


def default_seed() -> int:
    """Seed from SEMSOFT_SEED, or 0."""
    raw = os.getenv(SEED_ENV_VAR)
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got '{raw}'") from None


def load_run_config(
    path: Optional[str | Path] = None,
    overrides: Optional[list[str]] = None,
    seed: Optional[int] = None,
) -> RunConfig:
    """
    Build the effective RunConfig.

    Seed precedence: `seed` argument > train.seed from file/overrides >
    SEMSOFT_SEED > 0.

    Raises:
        ConfigError: On unreadable files, unknown keys or invalid values
    """
    flat: dict[str, Any] = {}
    if path is not None:
        try:
            loaded = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as e:
            raise ConfigError(f"cannot read {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path} is not valid JSON: {e}") from e
        if not isinstance(loaded, dict):
            raise ConfigError(f"{path} must hold a JSON object")
        flat.update(loaded)

    for item in overrides or []:
        key, value = parse_override(item)
        flat[key] = value

    if seed is not None:
        flat["train.seed"] = seed
    elif "train.seed" not in flat:
        flat["train.seed"] = default_seed()

    try:
        config = RunConfig.model_validate(expand_dotted(flat))
    except ValidationError as e:
        first = e.errors()[0]
        key = ".".join(str(part) for part in first["loc"])
        raise ConfigError(first["msg"], key=key) from e

    logger.info(f"Effective config: {json.dumps(flatten(config), sort_keys=True)}")
    return config
