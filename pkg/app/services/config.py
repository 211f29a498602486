import hashlib
import json
import os
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import dotenv_values, load_dotenv
from pydantic import ValidationError as PydanticValidationError

from app.models.codes import CodeLayout
from app.models.config import ExperimentConfig
from app.services.codes import make_layout
from app.utils.exceptions import ConfigError

load_dotenv()


def require_env(name: str) -> str:
    value = os.getenv(name)
    if value is None:
        raise ConfigError(message=f"Missing required environment variable: {name}")
    return value


# ---------- Paths ----------
RUNS_ROOT = os.getenv("BINPLAY_RUNS", "runs")


def _nest(flat: Dict[str, Optional[str]]) -> Dict[str, Dict[str, Any]]:
    nested: Dict[str, Dict[str, Any]] = {}
    for key, value in flat.items():
        section, sep, name = key.partition(".")
        if not sep or not name:
            raise ConfigError(message=f"Config key '{key}' must look like section.key")
        nested.setdefault(section, {})[name] = value
    return nested


def parse_config(flat: Dict[str, Optional[str]]) -> ExperimentConfig:
    """
    Validate flat section.key values into an ExperimentConfig

    Raises:
        ConfigError: On unknown keys or invalid values
    """
    try:
        return ExperimentConfig.model_validate(_nest(flat))
    except PydanticValidationError as e:
        problems = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())
        raise ConfigError(message="Invalid experiment config", detail=problems)


def load_config(path: Optional[Path] = None, overrides: Optional[Dict[str, str]] = None) -> ExperimentConfig:
    """
    Read a section.key = value file and apply overrides on top

    Args:
        path: Config file; defaults only when None
        overrides: Extra section.key values (from CLI flags)
    """
    flat: Dict[str, Optional[str]] = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(message=f"Config file not found: {path}")
        flat.update(dotenv_values(path))
    flat.update(overrides or {})
    return parse_config(flat)


def _render(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, list):
        if value and isinstance(value[0], list):
            return ", ".join(" ".join(str(c) for c in group) for group in value)
        return ", ".join(str(v) for v in value)
    if value is None:
        return "none"
    return str(value)


def dump_config(config: ExperimentConfig) -> str:
    """Render the config back to the flat section.key = value format"""
    lines = []
    for section, values in config.model_dump().items():
        for key, value in values.items():
            if value is None and key != "per_class_cap":
                continue
            lines.append(f"{section}.{key} = {_render(value)}")
    return "\n".join(lines) + "\n"


def config_hash(config: ExperimentConfig) -> str:
    canonical = json.dumps(config.model_dump(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def layout_from_config(config: ExperimentConfig) -> CodeLayout:
    codes = config.codes
    return make_layout(codes.index_bits, codes.index_primes, codes.prefix_bits, codes.prefix_prime)


def data_dir(config: ExperimentConfig) -> Path:
    return Path(config.data.dir or require_env("BINPLAY_DATA"))
