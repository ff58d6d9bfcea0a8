"""
ensquant.harness.runner
-----------------------
Runs one experiment: per repetition, simulate a dataset, share its Gibbs
draws and sister matrix across the six ensemble schemes, run the
benchmarks, and score everything on T3.

Repetitions are processed in batches of `spec.workers`; within a batch the
preparation jobs run first, then every (repetition, scheme) job. A failing
job is recorded and the run carries on.
"""

from __future__ import annotations

import pathlib
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from .. import db
from ..ensemble.pipeline import EnsembleInputs, EnsembleScheme, VariantMode, prepare_inputs, run_scheme
from ..ensemble.surface import QuantileSurface
from ..errors import StageError
from ..models.regress import DesignKind
from ..scheduler.job_queue import JobQueue
from ..score import (
    IntervalMetrics,
    LevelMetrics,
    WisdomDiagnostics,
    interval_metrics,
    interval_scores,
    wisdom_diagnostics,
)
from ..simulate import SimulatorSpec, ToyDataset, derive_seed, simulate
from .benchmarks import run_benchmark
from .experiments import BenchmarkScheme, ExperimentSpec


@dataclass(frozen=True)
class Failure:
    repetition: int
    scheme: str
    stage: str
    message: str


@dataclass
class ResultsBundle:
    spec: ExperimentSpec
    run_id: str = field(default_factory=lambda: uuid.uuid4().hex)
    metrics: Dict[Tuple[int, str], IntervalMetrics] = field(default_factory=dict)
    crossings: Dict[Tuple[int, str], int] = field(default_factory=dict)
    wisdom: Dict[Tuple[str, float], WisdomDiagnostics] = field(default_factory=dict)
    failures: List[Failure] = field(default_factory=list)
    surfaces: Dict[str, QuantileSurface] = field(default_factory=dict)
    sister_surfaces: Dict[str, List[QuantileSurface]] = field(default_factory=dict)
    started: str = ""
    wall_time_s: float = 0.0

    @property
    def scheme_labels(self) -> List[str]:
        return [s.label for s in EnsembleScheme.all()] + [b.value for b in self.spec.benchmarks]

    @property
    def partial(self) -> bool:
        return bool(self.failures) or not self.metrics

    def metrics_for(self, repetition: int = 0) -> Dict[str, IntervalMetrics]:
        return {
            label: self.metrics[(repetition, label)]
            for label in self.scheme_labels
            if (repetition, label) in self.metrics
        }

    def average_metrics(self) -> Dict[str, IntervalMetrics]:
        """Per-scheme means over the repetitions that completed; failed ones are left out."""
        out: Dict[str, IntervalMetrics] = {}
        for label in self.scheme_labels:
            runs = [m for (rep, lab), m in sorted(self.metrics.items()) if lab == label]
            if not runs:
                continue
            avg = IntervalMetrics()
            for alpha in self.spec.levels:
                cells = [r[alpha] for r in runs]
                avg.levels[float(alpha)] = LevelMetrics(
                    alpha=float(alpha),
                    cp=float(np.mean([c.cp for c in cells])),
                    aw=float(np.mean([c.aw for c in cells])),
                    ais=float(np.mean([c.ais for c in cells])),
                    crossed=int(sum(c.crossed for c in cells)),
                )
            out[label] = avg
        return out

    def table_metrics(self) -> Dict[str, IntervalMetrics]:
        return self.metrics_for(0) if self.spec.repetitions == 1 else self.average_metrics()


# ───────────────────────────── job bodies ───────────────────────────── #

@dataclass
class _Outcome:
    metrics: IntervalMetrics
    crossings: int = 0
    k0: Optional[int] = None
    wisdom: Dict[float, WisdomDiagnostics] = field(default_factory=dict)
    surface: Optional[QuantileSurface] = None
    sisters: Optional[List[QuantileSurface]] = None


def dataset_seed(spec: ExperimentSpec, repetition: int) -> int:
    return derive_seed(spec.seed, f"dataset/{spec.family.value}/{spec.n}/{repetition}")


def ensemble_seed(spec: ExperimentSpec, repetition: int) -> int:
    return derive_seed(spec.seed, f"ensemble/{spec.id.value}/{repetition}")


def benchmark_seed(spec: ExperimentSpec, repetition: int) -> int:
    return derive_seed(spec.seed, f"benchmark/{spec.id.value}/{repetition}")


def _prepare(spec: ExperimentSpec, repetition: int) -> Tuple[ToyDataset, Union[EnsembleInputs, StageError]]:
    try:
        dataset = simulate(SimulatorSpec(family=spec.family, n=spec.n, seed=dataset_seed(spec, repetition)), spec.split)
    except Exception as e:
        raise StageError("simulate", e) from e
    try:
        inputs = prepare_inputs(dataset, spec.design, spec.m, ensemble_seed(spec, repetition), burn_in=spec.burn_in)
    except StageError as e:
        return dataset, e
    return dataset, inputs


def _score(surface: QuantileSurface, y3: np.ndarray, levels: Sequence[float]) -> IntervalMetrics:
    try:
        return interval_metrics(surface, y3, levels)
    except Exception as e:
        raise StageError("score", e) from e


def _ensemble_job(
    spec: ExperimentSpec,
    repetition: int,
    scheme: EnsembleScheme,
    dataset: ToyDataset,
    inputs: EnsembleInputs,
    single: bool,
    keep_sisters: bool,
) -> _Outcome:
    _, y3 = dataset.period("t3")
    sister_ais: Dict[float, List[float]] = {float(a): [] for a in spec.levels}

    def score_sister(k: int, surface: QuantileSurface) -> None:
        for alpha, ais in interval_scores(surface, y3, spec.levels).items():
            sister_ais[alpha].append(ais)

    result = run_scheme(
        scheme,
        dataset,
        spec.design,
        spec.m,
        ensemble_seed(spec, repetition),
        burn_in=spec.burn_in,
        probabilities=spec.probabilities,
        settings=spec.regress,
        inputs=inputs,
        keep_sisters=keep_sisters and single,
        on_sister=score_sister if single else None,
    )
    metrics = _score(result.final, y3, spec.levels)
    wisdom = {a: wisdom_diagnostics(v, metrics[a].ais) for a, v in sister_ais.items()} if single else {}
    return _Outcome(
        metrics=metrics,
        crossings=result.crossings,
        k0=result.k0,
        wisdom=wisdom,
        surface=result.final if single else None,
        sisters=result.per_sister,
    )


def _benchmark_job(spec: ExperimentSpec, repetition: int, scheme: BenchmarkScheme, dataset: ToyDataset, single: bool) -> _Outcome:
    try:
        surface = run_benchmark(
            scheme,
            dataset,
            DesignKind.LINEAR,
            probabilities=spec.probabilities,
            seed=benchmark_seed(spec, repetition),
            draws=spec.bayesian_draws,
            burn_in=spec.burn_in,
            fit_size=spec.nonregression_fit_size,
            settings=spec.regress,
        )
    except Exception as e:
        raise StageError("benchmark", e) from e
    _, y3 = dataset.period("t3")
    return _Outcome(
        metrics=_score(surface, y3, spec.levels),
        crossings=surface.crossings(),
        surface=surface if single else None,
    )


# ───────────────────────────── orchestration ───────────────────────────── #

def _batches(n: int, size: int) -> Iterator[List[int]]:
    for start in range(0, n, size):
        yield list(range(start, min(start + size, n)))


def _as_failure(repetition: int, label: str, exc: BaseException) -> Failure:
    if isinstance(exc, StageError):
        return Failure(repetition, label, exc.stage, f"{type(exc.cause).__name__}: {exc.cause}")
    return Failure(repetition, label, "unknown", f"{type(exc).__name__}: {exc}")


class _Recorder:
    """Folds job outcomes into the bundle and mirrors them into the store."""

    def __init__(self, bundle: ResultsBundle, db_path: Optional[pathlib.Path]):
        self.bundle = bundle
        self.db_path = db_path

    def fail(self, repetition: int, label: str, exc: BaseException) -> None:
        failure = _as_failure(repetition, label, exc)
        self.bundle.failures.append(failure)
        logger.warning("{} rep {} {}: {} failed: {}", self.bundle.spec.id.value, repetition, label, failure.stage, failure.message)
        if self.db_path is not None:
            db.insert_failure(self.db_path, self.bundle.run_id, repetition, label, failure.stage, failure.message)

    def ok(self, repetition: int, label: str, out: _Outcome) -> None:
        b = self.bundle
        b.metrics[(repetition, label)] = out.metrics
        b.crossings[(repetition, label)] = out.crossings
        if out.surface is not None:
            b.surfaces[label] = out.surface
        if out.sisters is not None:
            b.sister_surfaces[label] = out.sisters
        for alpha, diag in out.wisdom.items():
            b.wisdom[(label, alpha)] = diag
        if self.db_path is None:
            return
        rows = [(a, lm.cp, lm.aw, lm.ais, lm.crossed) for a, lm in sorted(out.metrics.levels.items())]
        db.insert_metrics(self.db_path, b.run_id, repetition, label, rows, out.crossings, out.k0)
        for alpha, diag in out.wisdom.items():
            db.insert_wisdom(self.db_path, b.run_id, label, alpha, diag.ri_values)


def run_experiment(
    spec: ExperimentSpec,
    *,
    db_path: Optional[pathlib.Path] = None,
    keep_sisters: bool = False,
) -> ResultsBundle:
    started = datetime.now(timezone.utc).isoformat()
    bundle = ResultsBundle(spec=spec, started=started)
    if db_path is not None:
        db.init(db_path)
        db.insert_run(
            db_path,
            {"id": bundle.run_id, "experiment": spec.id.value, "spec": spec.model_dump_json(), "started": started},
        )

    rec = _Recorder(bundle, db_path)
    single = spec.repetitions == 1
    schemes = EnsembleScheme.all()
    logger.info(
        "{}: {} repetition(s), m={}, n={}/{}/{}, seed={}",
        spec.id.value, spec.repetitions, spec.m, spec.split.n1, spec.split.n2, spec.split.n3, spec.seed,
    )
    t0 = time.perf_counter()

    with JobQueue(workers=spec.workers) as queue:
        for batch in _batches(spec.repetitions, spec.workers):
            for rep in batch:
                queue.submit(rep, _prepare, spec, rep, experiment=spec.id.value, repetition=rep, scheme="prepare")
            prepared = queue.results()

            for rep in batch:
                prep = prepared[rep]
                if isinstance(prep, BaseException):
                    for label in bundle.scheme_labels:
                        rec.fail(rep, label, prep)
                    continue
                dataset, inputs = prep
                for scheme in schemes:
                    if isinstance(inputs, StageError):
                        rec.fail(rep, scheme.label, inputs)
                        continue
                    queue.submit(
                        (rep, scheme.label), _ensemble_job, spec, rep, scheme, dataset, inputs, single, keep_sisters,
                        priority="high" if scheme.variant is VariantMode.POOLED else "normal",
                        experiment=spec.id.value, repetition=rep, scheme=scheme.label,
                    )
                for bench in spec.benchmarks:
                    queue.submit(
                        (rep, bench.value), _benchmark_job, spec, rep, bench, dataset, single,
                        experiment=spec.id.value, repetition=rep, scheme=bench.value,
                    )

            for (rep, label), out in queue.results().items():
                if isinstance(out, BaseException):
                    rec.fail(rep, label, out)
                else:
                    rec.ok(rep, label, out)

    bundle.failures.sort(key=lambda f: (f.repetition, f.scheme))
    bundle.wall_time_s = time.perf_counter() - t0
    if db_path is not None:
        db.update_run(
            db_path,
            bundle.run_id,
            status="partial" if bundle.partial else "completed",
            completed=datetime.now(timezone.utc).isoformat(),
            wall_time_s=bundle.wall_time_s,
        )
    logger.info(
        "{}: finished in {:.1f}s with {} failure(s)", spec.id.value, bundle.wall_time_s, len(bundle.failures)
    )
    return bundle


def load_bundles(db_path: pathlib.Path) -> List[ResultsBundle]:
    """Rebuild bundles (without surfaces) from a run store."""
    bundles = []
    for run in db.list_runs(db_path):
        spec = ExperimentSpec.model_validate_json(run["spec"])
        rows = db.run_rows(db_path, run["id"])
        bundle = ResultsBundle(spec=spec, run_id=run["id"], started=run["started"] or "", wall_time_s=run["wall_time_s"] or 0.0)
        for r in rows["metrics"]:
            bundle.metrics.setdefault((r["repetition"], r["scheme"]), IntervalMetrics()).levels[r["level"]] = LevelMetrics(
                alpha=r["level"], cp=r["cp"], aw=r["aw"], ais=r["ais"], crossed=r["crossed"]
            )
        for r in rows["outcomes"]:
            bundle.crossings[(r["repetition"], r["scheme"])] = r["crossings"]
        ri: Dict[Tuple[str, float], List[float]] = {}
        for r in rows["wisdom"]:
            ri.setdefault((r["scheme"], r["level"]), []).append(r["ri"])
        for key, values in ri.items():
            arr = np.asarray(values, dtype=float)
            bundle.wisdom[key] = WisdomDiagnostics(mean_ri=float(np.mean(arr)), ri_values=arr)
        bundle.failures = [Failure(r["repetition"], r["scheme"], r["stage"], r["message"]) for r in rows["failures"]]
        bundles.append(bundle)
    return bundles
