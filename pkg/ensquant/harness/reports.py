"""
ensquant.harness.reports
------------------------
Turns result bundles into CSV tables and figure data:

    table4 … table7, tableD1, tableD2   metric,scheme,level,value
    fig7_ri.csv / fig8_ri.csv           level,sister,ri (Toy4Exp, schemes 4 and 5)
    wisdom.csv                          mean crowd-wisdom RI per experiment/scheme/level
    improvements.csv                    comparison,candidate,benchmark,level,ri
    surfaces/<experiment>/<scheme>.csv  final quantile surfaces of single-repetition runs
    run_manifest.json                   seed, m, versions, wall time, failures
"""

from __future__ import annotations

import json
import pathlib
import platform
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from typing import Callable, Dict, List, Sequence, Union

import pandas as pd

from ..ensemble.pipeline import EnsembleScheme
from ..errors import ReportIOError
from ..score import relative_improvement, write_metrics_csv
from .experiments import BenchmarkScheme, ExperimentId
from .runner import ResultsBundle

MANIFEST = "run_manifest.json"
_FIGURE_SCHEMES = {"fig7_ri.csv": 4, "fig8_ri.csv": 5}


@dataclass
class ReportResult:
    files: List[pathlib.Path] = field(default_factory=list)
    partial: bool = False


def _write(path: pathlib.Path, writer: Callable[[pathlib.Path], object], out: ReportResult) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        writer(path)
    except OSError as e:
        raise ReportIOError(path, e) from e
    out.files.append(path)


def _versions() -> Dict[str, str]:
    out = {"python": platform.python_version()}
    for pkg in ("ensquant", "numpy", "scipy", "pandas", "pydantic"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = "unknown"
    return out


def _ri_frame(bundle: ResultsBundle, scheme_number: int) -> pd.DataFrame:
    label = EnsembleScheme.from_number(scheme_number).label
    rows = []
    for (lab, alpha), diag in sorted(bundle.wisdom.items()):
        if lab == label:
            rows += [(alpha, k + 1, float(v)) for k, v in enumerate(diag.ri_values)]
    return pd.DataFrame(rows, columns=["level", "sister", "ri"])


def improvement_summary(bundles: Sequence[ResultsBundle]) -> pd.DataFrame:
    """Relative AIS improvements between schemes of interest.

    * quantile- over linear-regression error model (scheme k+3 over k) within an experiment
    * each ensemble scheme over the benchmark of the same error-model family
    * Toy4Exp over Toy3Exp for schemes 4-6 (better point model)
    """
    rows = []
    tables = {b.spec.id: b.table_metrics() for b in bundles}

    def add(comparison, cand, bench, cand_label, bench_label):
        if cand_label not in cand or bench_label not in bench:
            return
        for alpha, lm in sorted(cand[cand_label].levels.items()):
            try:
                ri = relative_improvement(lm.ais, bench[bench_label][alpha].ais)
            except (KeyError, ValueError):
                continue
            rows.append((comparison, cand_label, bench_label, alpha, ri))

    for eid, table in tables.items():
        for k in (1, 2, 3):
            add(f"{eid.value}: error model", table, table,
                EnsembleScheme.from_number(k + 3).label, EnsembleScheme.from_number(k).label)
        for k in range(1, 7):
            bench = BenchmarkScheme.LINEAR_REGRESSION if k <= 3 else BenchmarkScheme.QUANTILE_REGRESSION
            add(f"{eid.value}: ensemble vs benchmark", table, table, EnsembleScheme.from_number(k).label, bench.value)

    if ExperimentId.TOY3 in tables and ExperimentId.TOY4 in tables:
        for k in (4, 5, 6):
            label = EnsembleScheme.from_number(k).label
            add("Toy4Exp vs Toy3Exp", tables[ExperimentId.TOY4], tables[ExperimentId.TOY3], label, label)

    return pd.DataFrame(rows, columns=["comparison", "candidate", "benchmark", "level", "ri"])


def emit_reports(
    bundles: Union[ResultsBundle, Sequence[ResultsBundle]],
    out_dir: Union[str, pathlib.Path],
    *,
    write_surfaces: bool = True,
) -> ReportResult:
    if isinstance(bundles, ResultsBundle):
        bundles = [bundles]
    out_dir = pathlib.Path(out_dir)
    out = ReportResult(partial=not bundles or any(b.partial for b in bundles))

    wisdom_rows = []
    for bundle in bundles:
        spec = bundle.spec
        table = bundle.table_metrics()
        if table:
            _write(out_dir / f"{spec.table}.csv", lambda p, t=table: write_metrics_csv(t, p), out)

        if spec.id is ExperimentId.TOY4:
            for name, number in _FIGURE_SCHEMES.items():
                frame = _ri_frame(bundle, number)
                if not frame.empty:
                    _write(out_dir / name, lambda p, f=frame: f.to_csv(p, index=False, float_format="%.17g"), out)

        for (label, alpha), diag in sorted(bundle.wisdom.items()):
            wisdom_rows.append((spec.id.value, label, alpha, diag.mean_ri))

        if write_surfaces:
            base = out_dir / "surfaces" / spec.id.value
            for label, surface in bundle.surfaces.items():
                _write(base / f"{label}.csv", surface.to_csv, out)
            for label, sisters in bundle.sister_surfaces.items():
                for k, surface in enumerate(sisters, start=1):
                    _write(base / label / f"sister_{k}.csv", surface.to_csv, out)

    if wisdom_rows:
        frame = pd.DataFrame(wisdom_rows, columns=["experiment", "scheme", "level", "mean_ri"])
        _write(out_dir / "wisdom.csv", lambda p: frame.to_csv(p, index=False, float_format="%.17g"), out)

    improvements = improvement_summary(bundles)
    if not improvements.empty:
        _write(out_dir / "improvements.csv", lambda p: improvements.to_csv(p, index=False, float_format="%.17g"), out)

    manifest = {
        "created": datetime.now(timezone.utc).isoformat(),
        "seed": bundles[0].spec.seed if bundles else None,
        "m": bundles[0].spec.m if bundles else None,
        "experiments": [
            {
                "id": b.spec.id.value,
                "run_id": b.run_id,
                "table": b.spec.table,
                "scale": b.spec.scale,
                "seed": b.spec.seed,
                "m": b.spec.m,
                "repetitions": b.spec.repetitions,
                "split": [b.spec.split.n1, b.spec.split.n2, b.spec.split.n3],
                "started": b.started,
                "wall_time_s": b.wall_time_s,
                "crossings": sum(b.crossings.values()),
                "failures": [asdict(f) for f in b.failures],
            }
            for b in bundles
        ],
        "versions": _versions(),
        "wall_time_s": sum(b.wall_time_s for b in bundles),
        "partial": out.partial,
        "files": sorted(str(p.relative_to(out_dir)) for p in out.files),
    }
    _write(out_dir / MANIFEST, lambda p: p.write_text(json.dumps(manifest, indent=2)), out)
    return out
