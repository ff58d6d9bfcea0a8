"""
ensquant.score
--------------
Interval-forecast verification for central (1 - alpha) intervals:

    CP   fraction of y_t inside [l_t, u_t] (closed)
    AW   mean(u_t - l_t)
    AIS  mean((u - l) + 2/alpha (l - y) 1{y < l} + 2/alpha (y - u) 1{y > u})
    RI   (AIS_benchmark - AIS_candidate) / AIS_benchmark

Crossed intervals (l > u) are scored as printed and counted, never clamped.
"""

from __future__ import annotations

import pathlib
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from .ensemble.surface import QuantileSurface
from .errors import DomainError, ShapeError
from .models.regress import ArrayLike

DEFAULT_LEVELS: Tuple[float, ...] = (0.01, 0.025, 0.05, 0.10, 0.20)
METRIC_COLUMNS = ["metric", "scheme", "level", "value"]


class IntervalLevelSpec(BaseModel):
    alpha: float = Field(..., gt=0.0, lt=1.0)

    model_config = {"frozen": True}

    @property
    def lower_p(self) -> float:
        return self.alpha / 2.0

    @property
    def upper_p(self) -> float:
        return 1.0 - self.alpha / 2.0

    @property
    def label(self) -> str:
        return f"{100.0 * (1.0 - self.alpha):g}%"


def _series(*arrays: ArrayLike) -> List[np.ndarray]:
    out = [np.asarray(a, dtype=float).ravel() for a in arrays]
    if out[0].size == 0:
        raise DomainError("interval metrics need at least one time step")
    if any(a.size != out[0].size for a in out):
        raise ShapeError(f"series lengths differ: {[a.size for a in out]}")
    return out


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")


def coverage_probability(lower: ArrayLike, upper: ArrayLike, y: ArrayLike) -> float:
    lower, upper, y = _series(lower, upper, y)
    return float(np.mean((y >= lower) & (y <= upper)))


def average_width(lower: ArrayLike, upper: ArrayLike) -> float:
    lower, upper = _series(lower, upper)
    return float(np.mean(upper - lower))


def interval_penalty(lower: ArrayLike, upper: ArrayLike, y: ArrayLike, alpha: float) -> np.ndarray:
    """Per-step miss penalty; zero on the bounds."""
    _check_alpha(alpha)
    lower, upper, y = _series(lower, upper, y)
    scale = 2.0 / alpha
    return scale * (lower - y) * (y < lower) + scale * (y - upper) * (y > upper)


def average_interval_score(lower: ArrayLike, upper: ArrayLike, y: ArrayLike, alpha: float) -> float:
    lower_a, upper_a, y_a = _series(lower, upper, y)
    return float(np.mean((upper_a - lower_a) + interval_penalty(lower_a, upper_a, y_a, alpha)))


def relative_improvement(ais_candidate: float, ais_benchmark: float) -> float:
    if ais_benchmark == 0:
        raise DomainError("relative improvement against a zero benchmark score is undefined")
    return (ais_benchmark - ais_candidate) / ais_benchmark


# ─────────────────────────── crowd wisdom ─────────────────────────── #

@dataclass(frozen=True)
class WisdomDiagnostics:
    mean_ri: float
    ri_values: np.ndarray  # one RI per sister, the ensemble as candidate


def wisdom_diagnostics(per_sister_ais: Sequence[float], ensemble_ais: float) -> WisdomDiagnostics:
    if len(per_sister_ais) == 0:
        raise DomainError("crowd-wisdom diagnostics need at least one sister score")
    ri = np.array([relative_improvement(ensemble_ais, a) for a in per_sister_ais])
    return WisdomDiagnostics(mean_ri=float(np.mean(ri)), ri_values=ri)


# ─────────────────────── all levels of a surface ─────────────────────── #

@dataclass(frozen=True)
class LevelMetrics:
    alpha: float
    cp: float
    aw: float
    ais: float
    crossed: int = 0


@dataclass
class IntervalMetrics:
    levels: Dict[float, LevelMetrics] = field(default_factory=dict)

    def __getitem__(self, alpha: float) -> LevelMetrics:
        for a, lm in self.levels.items():
            if np.isclose(a, alpha, rtol=0.0, atol=1e-12):
                return lm
        raise KeyError(alpha)

    def ais(self) -> Dict[float, float]:
        return {a: lm.ais for a, lm in self.levels.items()}

    def rows(self, scheme: str) -> List[Tuple[str, str, float, float]]:
        out = []
        for a, lm in sorted(self.levels.items()):
            out += [("CP", scheme, a, lm.cp), ("AW", scheme, a, lm.aw), ("AIS", scheme, a, lm.ais)]
        return out


def level_metrics(lower: np.ndarray, upper: np.ndarray, y: np.ndarray, alpha: float) -> LevelMetrics:
    return LevelMetrics(
        alpha=float(alpha),
        cp=coverage_probability(lower, upper, y),
        aw=average_width(lower, upper),
        ais=average_interval_score(lower, upper, y, alpha),
        crossed=int(np.sum(np.asarray(lower) > np.asarray(upper))),
    )


def interval_metrics(
    surface: QuantileSurface, y: ArrayLike, levels: Iterable[float] = DEFAULT_LEVELS
) -> IntervalMetrics:
    y = np.asarray(y, dtype=float).ravel()
    if y.size != surface.n:
        raise ShapeError(f"surface covers {surface.n} steps but y has {y.size}")
    out = IntervalMetrics()
    for alpha in levels:
        _check_alpha(alpha)
        lower, upper = surface.interval(alpha)
        out.levels[float(alpha)] = level_metrics(lower, upper, y, alpha)
    return out


def interval_scores(surface: QuantileSurface, y: np.ndarray, levels: Iterable[float]) -> Dict[float, float]:
    """AIS only; the hot path of per-sister crowd-wisdom scoring."""
    out = {}
    for alpha in levels:
        lower, upper = surface.interval(alpha)
        out[float(alpha)] = average_interval_score(lower, upper, y, alpha)
    return out


def scheme_improvements(candidate: IntervalMetrics, benchmark: IntervalMetrics) -> Dict[float, float]:
    """RI of `candidate` over `benchmark` at every level both carry."""
    out = {}
    for alpha, lm in sorted(candidate.levels.items()):
        try:
            out[alpha] = relative_improvement(lm.ais, benchmark[alpha].ais)
        except KeyError:
            continue
    return out


# ─────────────────────────── metrics CSV ─────────────────────────── #

def metrics_frame(by_scheme: Dict[str, IntervalMetrics]) -> pd.DataFrame:
    rows = [r for scheme, metrics in by_scheme.items() for r in metrics.rows(scheme)]
    return pd.DataFrame(rows, columns=METRIC_COLUMNS)


def write_metrics_csv(by_scheme: Dict[str, IntervalMetrics], path: Union[str, pathlib.Path]) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    metrics_frame(by_scheme).to_csv(path, index=False, float_format="%.17g")
    return path


def frame_to_metrics(frame: pd.DataFrame) -> Dict[str, IntervalMetrics]:
    missing = set(METRIC_COLUMNS) - set(frame.columns)
    if missing:
        raise ShapeError(f"metrics table lacks columns: {', '.join(sorted(missing))}")
    out: Dict[str, IntervalMetrics] = {}
    for (scheme, level), group in frame.groupby(["scheme", "level"], sort=False):
        values = dict(zip(group["metric"], group["value"].astype(float)))
        out.setdefault(str(scheme), IntervalMetrics()).levels[float(level)] = LevelMetrics(
            alpha=float(level), cp=values["CP"], aw=values["AW"], ais=values["AIS"]
        )
    return out


def read_metrics_csv(path: Union[str, pathlib.Path]) -> Dict[str, IntervalMetrics]:
    path = pathlib.Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Metrics CSV not found: {path}")
    return frame_to_metrics(pd.read_csv(path))
