"""
ensquant.config
---------------
Loads `default.yaml`, merges an optional user YAML file on top of it and
validates the result.

Precedence: CLI flag > user file > packaged default.
"""

from __future__ import annotations

import copy
import os
import pathlib
from typing import Any, Dict, List, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from ..errors import ConfigurationError

DEFAULT_CONFIG_PATH = pathlib.Path(__file__).parent / "default.yaml"
OUT_DIR_ENV = "ENSQUANT_OUT_DIR"


class RegressSettings(BaseModel):
    simplex_max_rows: int = Field(50_000, ge=1)
    ipm_tolerance: float = Field(1e-8, gt=0)
    ipm_max_iter: int = Field(500, ge=1)

    model_config = {"extra": "forbid"}


class BenchmarkSettings(BaseModel):
    bayesian_draws: int = Field(1000, ge=1)
    nonregression_fit_size: int = Field(200, ge=2)

    model_config = {"extra": "forbid"}


class Settings(BaseModel):
    """Validated view of the merged configuration."""

    seed: int = Field(..., ge=0)
    m: int = Field(..., ge=1)
    burn_in: int = Field(..., ge=0)
    workers: int = Field(..., ge=1)
    probabilities: List[float]
    levels: List[float]
    split: Dict[str, Tuple[int, int, int]]
    repetitions: Dict[str, int]
    regress: RegressSettings = RegressSettings()
    benchmarks: BenchmarkSettings = BenchmarkSettings()
    scales: Dict[str, Dict[str, Any]] = {}

    model_config = {"extra": "forbid"}

    @field_validator("probabilities")
    @classmethod
    def check_grid(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("probability grid is empty")
        if any(not (0.0 < p < 1.0) for p in v):
            raise ValueError("probabilities must lie strictly between 0 and 1")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("probabilities must be strictly increasing")
        return v

    @field_validator("levels")
    @classmethod
    def check_levels(cls, v: List[float]) -> List[float]:
        if any(not (0.0 < a < 1.0) for a in v):
            raise ValueError("interval levels (alpha) must lie strictly between 0 and 1")
        return v

    @model_validator(mode="after")
    def check_levels_on_grid(self) -> "Settings":
        for alpha in self.levels:
            for p in (alpha / 2, 1 - alpha / 2):
                if not any(abs(p - q) < 1e-12 for q in self.probabilities):
                    raise ValueError(f"level alpha={alpha} needs p={p} on the probability grid")
        return self


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def _read_yaml(path: pathlib.Path) -> Dict[str, Any]:
    if not path.is_file():
        raise ConfigurationError(f"Config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Invalid YAML in {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"Config file {path} must hold a key-value mapping")
    return data


def load_config(
    path: Optional[Union[str, pathlib.Path]] = None,
    *,
    scale: str = "full",
    overrides: Optional[Dict[str, Any]] = None,
) -> Settings:
    """Merge default.yaml, the user file, the scale preset and explicit overrides."""
    data = _read_yaml(DEFAULT_CONFIG_PATH)
    if path is not None:
        data = _deep_merge(data, _read_yaml(pathlib.Path(path)))

    scales = data.get("scales", {})
    if scale not in scales:
        raise ConfigurationError(f"Unknown scale '{scale}'. Known: {', '.join(sorted(scales))}")
    data = _deep_merge(data, scales[scale] or {})
    if overrides:
        data = _deep_merge(data, {k: v for k, v in overrides.items() if v is not None})

    try:
        return Settings(**data)
    except ValidationError as e:
        details = "; ".join(
            f"{' -> '.join(map(str, err.get('loc', ())))}: {err.get('msg')}" for err in e.errors()
        )
        raise ConfigurationError(f"Invalid configuration: {details}") from e


def default_out_dir() -> pathlib.Path:
    return pathlib.Path(os.getenv(OUT_DIR_ENV, "ensquant_out"))


__all__ = ["Settings", "load_config", "default_out_dir", "DEFAULT_CONFIG_PATH", "OUT_DIR_ENV"]
