"""
ensquant CLI – ensemble post-processing experiments
---------------------------------------------------
Exit codes: 0 success, 1 partial output (some jobs failed), 2 configuration error.
"""

import inspect
from pathlib import Path
from typing import List, Optional

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table
from typing_extensions import Annotated

from ..api import core
from ..config import OUT_DIR_ENV, default_out_dir
from ..errors import ConfigurationError, EnsquantError
from ..harness import ExperimentId, ResultsBundle, list_presets

EXIT_PARTIAL = 1
EXIT_CONFIG = 2

app = typer.Typer(
    name="ensquant",
    help="ensquant – quantile averaging of sister-model ensembles, with the toy-study experiment harness.",
    add_completion=True,
    no_args_is_help=True,
)
console = Console()


def _fail(message: str, code: int) -> None:
    typer.secho(message, fg=typer.colors.RED, err=True)
    raise typer.Exit(code=code)


def _summary(bundle: ResultsBundle) -> Table:
    table = Table(title=f"{bundle.spec.id.value} ({bundle.spec.table})")
    table.add_column("scheme")
    levels = sorted(bundle.spec.levels)
    for alpha in levels:
        table.add_column(f"AIS {100 * (1 - alpha):g}%", justify="right")
    for label, metrics in bundle.table_metrics().items():
        table.add_row(label, *(f"{metrics[a].ais:.3f}" for a in levels))
    return table


# --- Commands ---

@app.command(name="simulate", help="Write a seeded toy dataset to CSV (t,x,y,period).")
def simulate_cmd(
    family: Annotated[str, typer.Argument(help="Toy1, Toy2, Toy3 or NonInformative.")],
    n: Annotated[int, typer.Option(help="Number of time steps.")] = 12_000,
    seed: Annotated[int, typer.Option(help="64-bit seed.")] = 20190731,
    split: Annotated[Optional[str], typer.Option(help="T1/T2/T3 sizes as n1,n2,n3.")] = None,
    out: Annotated[Optional[Path], typer.Option(help="Output CSV (default <out-dir>/<family>.csv).")] = None,
):
    """
    Simulate a toy dataset.

    Examples:
      ensquant simulate Toy1 --n 12000 --seed 7
      ensquant simulate NonInformative --n 300 --split 100,100,100 --out d2.csv
    """
    try:
        sizes = tuple(int(s) for s in split.split(",")) if split else None
        if sizes is not None and len(sizes) != 3:
            raise ConfigurationError(f"--split needs three sizes, got '{split}'")
        path = out or default_out_dir() / f"{family}.csv"
        dataset = core.simulate_dataset(family, n, seed, split=sizes, out=path)
        typer.echo(f"Wrote {dataset.n} rows to {typer.style(str(path), fg=typer.colors.GREEN)}")
    except (ConfigurationError, ValidationError, ValueError) as e:
        _fail(f"Configuration error: {e}", EXIT_CONFIG)
    except OSError as e:
        _fail(f"Error: {e}", EXIT_PARTIAL)


@app.command(name="run", help="Run experiments and write tables, figure data and the run manifest.")
def run_cmd(
    experiments: Annotated[List[str], typer.Argument(help="Experiment ids (see `ensquant experiments`), or 'all'.")],
    out_dir: Annotated[Optional[Path], typer.Option(help=f"Output directory (default ${OUT_DIR_ENV} or ./ensquant_out).")] = None,
    scale: Annotated[str, typer.Option(help="full (as published) or desk (m=200, 50 repetitions).")] = "full",
    config: Annotated[Optional[Path], typer.Option(help="YAML file merged over the packaged defaults.")] = None,
    seed: Annotated[Optional[int], typer.Option(help="Master seed.")] = None,
    m: Annotated[Optional[int], typer.Option(help="Ensemble size (number of sisters).")] = None,
    repetitions: Annotated[Optional[int], typer.Option(help="Repetitions per experiment.")] = None,
    workers: Annotated[Optional[int], typer.Option(help="Worker threads.")] = None,
    keep_sisters: Annotated[bool, typer.Option(help="Also write every per-sister surface.")] = False,
    log_level: Annotated[str, typer.Option(help="Console log level.")] = "INFO",
):
    """
    Run one or more experiments end to end.

    Examples:
      ensquant run Toy1Exp
      ensquant run Toy3Exp Toy4Exp --scale desk --out-dir results/
      ensquant run AddType2 --repetitions 50 --workers 8
    """
    ids = [e.value for e in ExperimentId] if experiments == ["all"] else experiments
    target = out_dir or default_out_dir()
    try:
        bundles, result = core.run(
            ids, target, scale=scale, config_path=config, seed=seed, m=m,
            workers=workers, repetitions=repetitions, keep_sisters=keep_sisters, log_level=log_level,
        )
    except (ConfigurationError, ValidationError) as e:
        _fail(f"Configuration error: {e}", EXIT_CONFIG)
    except EnsquantError as e:
        _fail(f"Error: {e}", EXIT_PARTIAL)

    for bundle in bundles:
        console.print(_summary(bundle))
        for f in bundle.failures:
            typer.secho(f"  rep {f.repetition} {f.scheme} [{f.stage}]: {f.message}", fg=typer.colors.YELLOW, err=True)
    typer.echo(f"{len(result.files)} files written under {target}")
    if result.partial:
        _fail("Run finished with failures; output is partial.", EXIT_PARTIAL)


@app.command(name="score", help="Score a quantile-surface CSV against observations; writes metric,scheme,level,value.")
def score_cmd(
    surface: Annotated[Path, typer.Argument(help="Surface CSV (t,p_0.005,…).", exists=True, dir_okay=False)],
    truth: Annotated[Path, typer.Argument(help="Observations CSV with a y column (dataset CSVs are cut to T3).", exists=True, dir_okay=False)],
    levels: Annotated[Optional[str], typer.Option(help="Comma-separated alpha levels.")] = None,
    scheme: Annotated[str, typer.Option(help="Scheme label written to the CSV.")] = "surface",
    out: Annotated[Optional[Path], typer.Option(help="Metrics CSV path (default: <out dir>/<scheme>_metrics.csv).")] = None,
):
    """
    Compute CP, AW and AIS for every central interval on the grid.

    Examples:
      ensquant score ensquant_out/surfaces/Toy1Exp/ensemble_scheme_2.csv toy1.csv
      ensquant score my_surface.csv obs.csv --levels 0.05,0.1 --out metrics.csv
    """
    try:
        alphas = tuple(float(a) for a in levels.split(",")) if levels else None
        kwargs = {"levels": alphas} if alphas else {}
        out = out or default_out_dir() / f"{scheme}_metrics.csv"
        metrics = core.score(surface, truth, scheme=scheme, out=out, **kwargs)
    except (ConfigurationError, ValueError) as e:
        _fail(f"Configuration error: {e}", EXIT_CONFIG)
    except OSError as e:
        _fail(f"Error: {e}", EXIT_PARTIAL)

    table = Table(title=scheme)
    for col in ("level", "CP", "AW", "AIS", "crossed"):
        table.add_column(col, justify="right")
    for alpha, lm in sorted(metrics.levels.items()):
        table.add_row(f"{alpha:g}", f"{lm.cp:.4f}", f"{lm.aw:.4f}", f"{lm.ais:.4f}", str(lm.crossed))
    console.print(table)


@app.command(name="report", help="Rebuild tables and the manifest from a run's bundle store.")
def report_cmd(
    out_dir: Annotated[Optional[Path], typer.Argument(help="Directory holding bundle.db.")] = None,
):
    """
    Re-emit report CSVs from bundle.db (e.g. after an interrupted run).

    Examples:
      ensquant report ensquant_out/
    """
    target = out_dir or default_out_dir()
    try:
        bundles, result = core.report(target)
    except FileNotFoundError as e:
        _fail(f"Error: {e}", EXIT_CONFIG)
    except EnsquantError as e:
        _fail(f"Error: {e}", EXIT_PARTIAL)
    for bundle in bundles:
        console.print(_summary(bundle))
    typer.echo(f"{len(result.files)} files written under {target}")
    if result.partial:
        raise typer.Exit(code=EXIT_PARTIAL)


@app.command("experiments", help="List the experiment presets.")
def list_experiments():
    table = Table(title="Experiments")
    for col in ("id", "dataset", "point model", "benchmarks"):
        table.add_column(col)
    for row in list_presets():
        table.add_row(*row)
    console.print(table)


@app.command(name="commands", help="List all ensquant commands with descriptions and examples.")
def list_all_commands():
    typer.echo(typer.style("Available ensquant commands:", fg=typer.colors.BRIGHT_BLUE, bold=True))
    infos = sorted(
        (c for c in app.registered_commands if c.callback and c.name != "commands"), key=lambda c: c.name or ""
    )
    for info in infos:
        typer.echo(f"\n  {typer.style(str(info.name), fg=typer.colors.GREEN, bold=True)}")
        typer.echo(f"    {info.help or 'No description provided.'}")
        doc = inspect.getdoc(info.callback) or ""
        lines = doc.splitlines()
        if any(l.strip().lower() == "examples:" for l in lines):
            start = next(i for i, l in enumerate(lines) if l.strip().lower() == "examples:") + 1
            examples = [l.strip() for l in lines[start:] if l.strip()]
            typer.echo(typer.style("    Examples:", underline=True))
            for ex in examples:
                typer.echo(f"      {ex}")
        typer.echo(f"    (For full options: ensquant {info.name} --help)")
    typer.echo(f"\nFor general help, type: {typer.style('ensquant --help', bold=True)}")


@app.callback()
def main_callback(ctx: typer.Context):
    """
    ensquant: sister predictions -> error-model quantiles -> quantile averaging -> interval scores.
    """


if __name__ == "__main__":
    app()
