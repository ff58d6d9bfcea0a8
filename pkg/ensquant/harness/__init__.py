from .benchmarks import run_benchmark
from .experiments import BenchmarkScheme, ExperimentId, ExperimentSpec, list_presets, parse_experiment
from .reports import ReportResult, emit_reports, improvement_summary
from .runner import Failure, ResultsBundle, load_bundles, run_experiment

__all__ = [
    "run_benchmark",
    "BenchmarkScheme", "ExperimentId", "ExperimentSpec", "list_presets", "parse_experiment",
    "ReportResult", "emit_reports", "improvement_summary",
    "Failure", "ResultsBundle", "load_bundles", "run_experiment",
]
