"""
ensquant.ensemble.surface
-------------------------
QuantileSurface: predicted quantiles on a fixed probability grid, one
column per forecast time step.
"""

from __future__ import annotations

import pathlib
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..errors import ConfigurationError, ShapeError

DEFAULT_PROBABILITIES: Tuple[float, ...] = (
    0.005, 0.0125, 0.025, 0.05, 0.10, 0.90, 0.95, 0.975, 0.9875, 0.995,
)


def grid_index(probabilities: Sequence[float], p: float) -> int:
    """Position of `p` on the grid, matched with a 1e-12 tolerance."""
    hits = np.flatnonzero(np.isclose(np.asarray(probabilities, dtype=float), p, rtol=0.0, atol=1e-12))
    if hits.size == 0:
        raise ConfigurationError(f"probability {p:g} is not on the grid {list(probabilities)}")
    return int(hits[0])


def reflection_index(probabilities: Sequence[float]) -> np.ndarray:
    """idx[i] such that probabilities[idx[i]] == 1 - probabilities[i]."""
    try:
        return np.array([grid_index(probabilities, 1.0 - p) for p in probabilities], dtype=int)
    except ConfigurationError as e:
        raise ConfigurationError(f"grid lacks a (p, 1-p) pair: {e}") from e


def column_name(p: float) -> str:
    return f"p_{p:g}"


@dataclass(frozen=True)
class QuantileSurface:
    probabilities: Tuple[float, ...]
    values: np.ndarray  # |p| x n3

    def __post_init__(self):
        probs = np.asarray(self.probabilities, dtype=float)
        if probs.ndim != 1 or probs.size == 0 or np.any(np.diff(probs) <= 0):
            raise ShapeError(f"probabilities must be a non-empty strictly increasing list, got {self.probabilities}")
        if self.values.ndim != 2 or self.values.shape[0] != probs.size:
            raise ShapeError(f"values of shape {self.values.shape} do not match {probs.size} probabilities")
        if not np.all(np.isfinite(self.values)):
            raise ShapeError("quantile surface holds non-finite values")

    @property
    def n(self) -> int:
        return int(self.values.shape[1])

    def quantile(self, p: float) -> np.ndarray:
        return self.values[grid_index(self.probabilities, p)]

    def interval(self, alpha: float) -> Tuple[np.ndarray, np.ndarray]:
        """(lower, upper) rows of the central (1 - alpha) interval."""
        return self.quantile(alpha / 2.0), self.quantile(1.0 - alpha / 2.0)

    def crossings(self) -> int:
        """Count of (adjacent p pair, t) cells where the lower-p quantile is above the higher-p one."""
        return int(np.sum(np.diff(self.values, axis=0) < 0))

    def shifted(self, c: float) -> "QuantileSurface":
        return QuantileSurface(self.probabilities, self.values + c)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.values.T, columns=[column_name(p) for p in self.probabilities])
        frame.insert(0, "t", np.arange(1, self.n + 1))
        return frame

    def to_csv(self, path: Union[str, pathlib.Path]) -> pathlib.Path:
        path = pathlib.Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.17g")
        return path


def read_surface_csv(path: Union[str, pathlib.Path]) -> QuantileSurface:
    path = pathlib.Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Surface CSV not found: {path}")
    frame = pd.read_csv(path)
    cols = [c for c in frame.columns if c.startswith("p_")]
    if not cols:
        raise ShapeError(f"{path} has no p_<probability> columns")
    try:
        probs = tuple(float(c[2:]) for c in cols)
    except ValueError as e:
        raise ShapeError(f"{path}: malformed probability column: {e}") from e
    return QuantileSurface(probs, frame[cols].to_numpy(dtype=float).T.copy())
