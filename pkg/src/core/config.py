"""
Run configuration.

Sources, lowest to highest precedence: field defaults, environment
(OCCU_ prefix, "__" between nested keys, .env file), configuration file,
command-line overrides.
"""

import logging
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

from pydantic import Field, ValidationError as PydanticValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from core.exceptions import ConfigError
from models.params import (
    CanonicalOccupancyConfig,
    CylinderSpec,
    FieldParams,
    LossWeights,
    MetricThresholds,
    PolicyLimits,
    StrictModel,
    WindowConfig,
)

logger = logging.getLogger(__name__)

# Stiffness from calibrate_stiffness(1.4 m/s, wall at 0.4 m, keep <= 0.5 of the
# speed) rounded up; a 1 m corridor keeps well over half the walking speed.
CALIBRATED_STIFFNESS = 0.003


class LogLevel(str, Enum):
    """Logging levels"""

    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"
    CRITICAL = "CRITICAL"


class PathsConfig(StrictModel):
    """Default input and output locations"""

    motion_dir: Path = Field(Path("data/motions"), description="Motion JSON files")
    grid_dir: Path = Field(Path("data/grids"), description="Grid files")
    output_dir: Path = Field(Path("out"), description="Command outputs")


class CalibratedFieldParams(FieldParams):
    """Field parameters with the calibrated stiffness as default"""

    k: float = Field(CALIBRATED_STIFFNESS, ge=0, description="Stiffness factor")


class RunConfig(BaseSettings):
    """Settings shared by every command"""

    paths: PathsConfig = Field(default_factory=PathsConfig)
    unit: float = Field(0.08, gt=0, description="Voxel edge length for MOB grids (m)")
    canonical: CanonicalOccupancyConfig = Field(default_factory=CanonicalOccupancyConfig)
    field: CalibratedFieldParams = Field(default_factory=CalibratedFieldParams)
    loss: LossWeights = Field(default_factory=LossWeights)
    window: WindowConfig = Field(default_factory=WindowConfig)
    policy: PolicyLimits = Field(default_factory=PolicyLimits)
    metrics: MetricThresholds = Field(default_factory=MetricThresholds)
    cylinder: CylinderSpec = Field(default_factory=CylinderSpec)
    bps_points: int = Field(1024, ge=1, description="Basis points of the BPS occupancy encoding")
    bps_radius: float = Field(1.0, gt=0, description="Basis ball radius (m)")
    threads: int = Field(1, ge=1, description="Worker threads for batch commands")
    seed: int = Field(0, description="Base seed")
    log_level: LogLevel = Field(LogLevel.INFO)

    model_config = SettingsConfigDict(
        env_prefix="OCCU_",
        env_nested_delimiter="__",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="forbid",
    )


def read_key_values(text: str, path: str = "<string>") -> List[Tuple[Optional[str], str, str, int]]:
    """
    Parse `key = value` lines with `#` comments and `[section]` headers.

    Returns:
        (section or None, key, value, line number) in file order

    Raises:
        ConfigError: malformed line
    """
    entries = []
    section = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if not section:
                raise ConfigError("Empty section header", path, number)
            continue
        if "=" not in line:
            raise ConfigError(f"Expected 'key = value', got '{line}'", path, number)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError("Missing key before '='", path, number)
        entries.append((section, key, value, number))
    return entries


def _nest(entries, path: str) -> Tuple[Dict[str, Any], Dict[Tuple[str, ...], int]]:
    values: Dict[str, Any] = {}
    lines: Dict[Tuple[str, ...], int] = {}
    for section, key, value, number in entries:
        loc = (section, key) if section else (key,)
        if loc in lines:
            raise ConfigError(f"Duplicate key '{'.'.join(loc)}' (first set on line {lines[loc]})", path, number)
        lines[loc] = number
        target = values.setdefault(section, {}) if section else values
        if not isinstance(target, dict):
            raise ConfigError(f"'{section}' is a value, not a section", path, number)
        target[key] = value
    return values, lines


def _error_line(loc: Tuple, lines: Mapping[Tuple[str, ...], int]) -> Optional[int]:
    loc = tuple(str(part) for part in loc)
    while loc:
        if loc in lines:
            return lines[loc]
        section = [number for key, number in lines.items() if key[: len(loc)] == loc]
        if section:
            return min(section)
        loc = loc[:-1]
    return None


def load_config(
    path: Optional[Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """
    Build the run configuration from environment, file and overrides.

    Raises:
        ConfigError: unreadable file, malformed line, unknown key or invalid value
    """
    values: Dict[str, Any] = {}
    lines: Dict[Tuple[str, ...], int] = {}
    source = str(path) if path else "<environment>"
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"Cannot read configuration: {e}", source) from e
        values, lines = _nest(read_key_values(text, source), source)

    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value

    try:
        config = RunConfig(**values)
    except PydanticValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(part) for part in first["loc"])
        raise ConfigError(f"{where}: {first['msg']}", source, _error_line(first["loc"], lines)) from e
    logger.debug(f"Loaded configuration from {source}")
    return config


@lru_cache()
def get_settings() -> RunConfig:
    """Get cached settings instance"""
    return RunConfig()


# Global settings instance
settings = get_settings()
