"""
ensquant.api.core
-----------------
Public façade used by the CLI: simulate, run experiments, score a surface,
rebuild reports from a bundle store.
"""

from __future__ import annotations

import pathlib
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger

from .. import db
from ..config import load_config
from ..ensemble.surface import read_surface_csv
from ..errors import ConfigurationError, ShapeError
from ..harness import ExperimentSpec, ReportResult, ResultsBundle, emit_reports, load_bundles, run_experiment
from ..monitoring import logger as run_log
from ..score import DEFAULT_LEVELS, IntervalMetrics, interval_metrics, write_metrics_csv
from ..simulate import PeriodSplit, SimulatorSpec, ToyDataset, simulate

PathLike = Union[str, pathlib.Path]


def simulate_dataset(
    family: str,
    n: int,
    seed: int,
    *,
    split: Optional[Tuple[int, int, int]] = None,
    out: Optional[PathLike] = None,
) -> ToyDataset:
    spec = SimulatorSpec(family=family, n=n, seed=seed)
    dataset = simulate(spec, PeriodSplit.from_tuple(split) if split else None)
    if out is not None:
        dataset.to_csv(out)
        logger.info("wrote {} rows of {} to {}", dataset.n, spec.family.value, out)
    return dataset


def run(
    experiments: Sequence[str],
    out_dir: PathLike,
    *,
    scale: str = "full",
    config_path: Optional[PathLike] = None,
    seed: Optional[int] = None,
    m: Optional[int] = None,
    workers: Optional[int] = None,
    repetitions: Optional[int] = None,
    keep_sisters: bool = False,
    log_level: str = "INFO",
) -> Tuple[List[ResultsBundle], ReportResult]:
    """Run the named experiments into `out_dir` and emit every report."""
    out_dir = pathlib.Path(out_dir)
    run_log.configure(log_level, out_dir)
    settings = load_config(config_path, scale=scale, overrides={"seed": seed, "m": m, "workers": workers})
    specs = [ExperimentSpec.preset(eid, scale, settings=settings, repetitions=repetitions) for eid in experiments]
    if not specs:
        raise ConfigurationError("no experiment selected")

    store = out_dir / db.BUNDLE_DB
    bundles = [run_experiment(spec, db_path=store, keep_sisters=keep_sisters) for spec in specs]
    return bundles, emit_reports(bundles, out_dir)


def report(out_dir: PathLike) -> Tuple[List[ResultsBundle], ReportResult]:
    out_dir = pathlib.Path(out_dir)
    store = out_dir / db.BUNDLE_DB
    if not store.is_file():
        raise FileNotFoundError(f"No bundle store at {store}; run `ensquant run` first")
    bundles = load_bundles(store)
    return bundles, emit_reports(bundles, out_dir, write_surfaces=False)


def _truth_series(frame: pd.DataFrame, n: int) -> np.ndarray:
    if "y" not in frame.columns:
        raise ShapeError("truth CSV needs a 'y' column")
    if "period" in frame.columns and int((frame["period"] == "T3").sum()) == n:
        frame = frame[frame["period"] == "T3"]
    y = frame["y"].to_numpy(dtype=float)
    if y.size != n:
        raise ShapeError(f"surface has {n} time steps but the truth CSV provides {y.size}")
    return y


def score(
    surface_csv: PathLike,
    truth_csv: PathLike,
    *,
    levels: Sequence[float] = DEFAULT_LEVELS,
    scheme: str = "surface",
    out: Optional[PathLike] = None,
) -> IntervalMetrics:
    """Score a surface CSV against observations (a dataset CSV is cut to its T3 rows)."""
    surface = read_surface_csv(surface_csv)
    truth_path = pathlib.Path(truth_csv)
    if not truth_path.is_file():
        raise FileNotFoundError(f"Truth CSV not found: {truth_path}")
    y = _truth_series(pd.read_csv(truth_path), surface.n)
    metrics = interval_metrics(surface, y, levels)
    if out is not None:
        write_metrics_csv({scheme: metrics}, out)
    return metrics
