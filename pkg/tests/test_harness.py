import json

import pandas as pd
import pytest

from ensquant import db
from ensquant.ensemble import EnsembleScheme
from ensquant.errors import ConfigurationError
from ensquant.harness import (
    BenchmarkScheme,
    ExperimentId,
    ExperimentSpec,
    emit_reports,
    improvement_summary,
    list_presets,
    load_bundles,
    parse_experiment,
    run_experiment,
)
from ensquant.harness import runner
from ensquant.harness.reports import MANIFEST
from ensquant.simulate import Family, PeriodSplit

SMALL = dict(split=PeriodSplit(n1=60, n2=60, n3=40), m=5, workers=2, burn_in=10, bayesian_draws=60)


def small_spec(eid, **overrides):
    return ExperimentSpec.preset(eid, "desk", **{**SMALL, **overrides})


def test_presets_match_the_study():
    assert [row[0] for row in list_presets()] == [e.value for e in ExperimentId]
    toy4 = ExperimentSpec.preset("Toy4Exp")
    assert toy4.family is Family.TOY3 and toy4.design.value == "quadratic"
    assert toy4.table == "table7"
    assert toy4.benchmarks == (BenchmarkScheme.LINEAR_REGRESSION, BenchmarkScheme.QUANTILE_REGRESSION)
    assert (toy4.split.n1, toy4.split.n2, toy4.split.n3) == (1000, 1000, 10000)
    assert toy4.repetitions == 1 and toy4.m == 1000

    add2 = ExperimentSpec.preset("addtype2")
    assert add2.family is Family.NON_INFORMATIVE
    assert add2.repetitions == 500 and add2.n == 300
    assert BenchmarkScheme.BAYESIAN_NON_REGRESSION in add2.benchmarks
    assert ExperimentSpec.preset("AddType2", "desk").repetitions == 50


def test_unknown_experiment():
    with pytest.raises(ConfigurationError, match="Toy5Exp"):
        parse_experiment("Toy5Exp")


def test_preset_ignores_none_overrides():
    spec = ExperimentSpec.preset("Toy1Exp", m=None, seed=None)
    assert spec.m == 1000


def test_single_repetition_run(tmp_path):
    spec = small_spec("Toy1Exp")
    store = tmp_path / db.BUNDLE_DB
    bundle = run_experiment(spec, db_path=store, keep_sisters=True)

    assert not bundle.failures and not bundle.partial
    table = bundle.table_metrics()
    assert list(table) == bundle.scheme_labels
    assert len(table) == 6 + 3
    for metrics in table.values():
        assert sorted(metrics.levels) == sorted(spec.levels)
        for lm in metrics.levels.values():
            assert 0.0 <= lm.cp <= 1.0
            assert lm.ais >= lm.aw

    # crowd wisdom per ensemble scheme and level, one RI per sister
    assert len(bundle.wisdom) == 6 * len(spec.levels)
    assert all(d.ri_values.size == spec.m for d in bundle.wisdom.values())
    assert set(bundle.surfaces) == set(bundle.scheme_labels)
    assert all(len(v) == spec.m for v in bundle.sister_surfaces.values())

    assert db.get_run(store, bundle.run_id)["status"] == "completed"


def test_run_is_deterministic():
    spec = small_spec("Toy2Exp", m=3)
    a, b = run_experiment(spec), run_experiment(spec)
    for label in a.scheme_labels:
        assert a.metrics[(0, label)] == b.metrics[(0, label)]


def test_repetitions_are_averaged():
    spec = small_spec("AddType1", repetitions=3, m=3, workers=2)
    bundle = run_experiment(spec)
    assert {rep for rep, _ in bundle.metrics} == {0, 1, 2}
    assert not bundle.wisdom and not bundle.surfaces

    label = EnsembleScheme.from_number(1).label
    avg = bundle.average_metrics()[label]
    for alpha in spec.levels:
        cells = [bundle.metrics[(rep, label)][alpha].ais for rep in range(3)]
        assert avg[alpha].ais == pytest.approx(sum(cells) / 3, rel=1e-12)
    assert bundle.table_metrics() == bundle.average_metrics()


def test_failures_are_recorded_and_run_continues(tmp_path, monkeypatch):
    real = runner.run_benchmark

    def flaky(scheme, *args, **kwargs):
        if scheme is BenchmarkScheme.QUANTILE_REGRESSION:
            raise RuntimeError("solver exploded")
        return real(scheme, *args, **kwargs)

    monkeypatch.setattr(runner, "run_benchmark", flaky)
    store = tmp_path / db.BUNDLE_DB
    spec = small_spec("Toy3Exp")
    bundle = run_experiment(spec, db_path=store)

    assert bundle.partial
    assert len(bundle.failures) == 1
    failure = bundle.failures[0]
    assert (failure.repetition, failure.scheme, failure.stage) == (0, "quantile_regression_benchmark", "benchmark")
    assert "solver exploded" in failure.message
    # everything else completed
    assert len(bundle.table_metrics()) == len(bundle.scheme_labels) - 1
    assert db.get_run(store, bundle.run_id)["status"] == "partial"


def test_failed_preparation_fails_every_scheme(monkeypatch):
    def broken(*args, **kwargs):
        raise ValueError("no data")

    monkeypatch.setattr(runner, "simulate", broken)
    bundle = run_experiment(small_spec("Toy2Exp", repetitions=2))
    assert len(bundle.failures) == 2 * len(bundle.scheme_labels)
    assert {f.stage for f in bundle.failures} == {"simulate"}
    assert not bundle.metrics and bundle.partial


def test_bundle_store_round_trip(tmp_path):
    store = tmp_path / db.BUNDLE_DB
    bundle = run_experiment(small_spec("Toy1Exp"), db_path=store)
    (loaded,) = load_bundles(store)

    assert loaded.run_id == bundle.run_id
    assert loaded.spec == bundle.spec
    assert loaded.metrics.keys() == bundle.metrics.keys()
    for key, metrics in bundle.metrics.items():
        for alpha, lm in metrics.levels.items():
            got = loaded.metrics[key][alpha]
            assert (got.cp, got.aw, got.ais, got.crossed) == (lm.cp, lm.aw, lm.ais, lm.crossed)
    for key, diag in bundle.wisdom.items():
        assert loaded.wisdom[key].ri_values.tolist() == diag.ri_values.tolist()
        assert loaded.wisdom[key].mean_ri == pytest.approx(diag.mean_ri, rel=1e-12)


def test_emit_reports_for_toy4(tmp_path):
    spec = small_spec("Toy4Exp")
    bundle = run_experiment(spec)
    result = emit_reports(bundle, tmp_path)
    assert not result.partial

    table = pd.read_csv(tmp_path / "table7.csv")
    assert list(table.columns) == ["metric", "scheme", "level", "value"]
    assert len(table) == 3 * len(spec.levels) * len(bundle.scheme_labels)

    for name in ("fig7_ri.csv", "fig8_ri.csv"):
        fig = pd.read_csv(tmp_path / name)
        assert list(fig.columns) == ["level", "sister", "ri"]
        assert (fig.groupby("level").size() == spec.m).all()
        assert fig["sister"].min() == 1 and fig["sister"].max() == spec.m

    wisdom = pd.read_csv(tmp_path / "wisdom.csv")
    assert set(wisdom["experiment"]) == {"Toy4Exp"}
    assert (tmp_path / "surfaces" / "Toy4Exp" / "ensemble_scheme_4.csv").is_file()

    manifest = json.loads((tmp_path / MANIFEST).read_text())
    assert manifest["partial"] is False
    assert manifest["seed"] == spec.seed and manifest["m"] == spec.m
    assert manifest["experiments"][0]["table"] == "table7"
    assert "table7.csv" in manifest["files"]


def test_no_figures_outside_toy4(tmp_path):
    emit_reports(run_experiment(small_spec("Toy3Exp")), tmp_path)
    assert (tmp_path / "table6.csv").is_file()
    assert not (tmp_path / "fig7_ri.csv").exists()


def test_empty_report_is_partial(tmp_path):
    result = emit_reports([], tmp_path)
    assert result.partial
    assert result.files == [tmp_path / MANIFEST]
    assert json.loads((tmp_path / MANIFEST).read_text())["experiments"] == []


def test_improvement_summary():
    toy3 = run_experiment(small_spec("Toy3Exp", m=3))
    toy4 = run_experiment(small_spec("Toy4Exp", m=3))
    frame = improvement_summary([toy3, toy4])
    assert list(frame.columns) == ["comparison", "candidate", "benchmark", "level", "ri"]
    cross = frame[frame["comparison"] == "Toy4Exp vs Toy3Exp"]
    assert set(cross["candidate"]) == {EnsembleScheme.from_number(k).label for k in (4, 5, 6)}
    assert len(cross) == 3 * len(toy3.spec.levels)

    t3 = toy3.table_metrics()
    row = frame[
        (frame["comparison"] == "Toy3Exp: error model")
        & (frame["candidate"] == "ensemble_scheme_4")
        & (frame["level"] == 0.05)
    ].iloc[0]
    expected = (t3["ensemble_scheme_1"][0.05].ais - t3["ensemble_scheme_4"][0.05].ais) / t3["ensemble_scheme_1"][0.05].ais
    assert row["ri"] == pytest.approx(expected)


# ───────────────────── reduced desk-scale studies ───────────────────── #

def _labels(*numbers):
    return [EnsembleScheme.from_number(k).label for k in numbers]


def test_toy4_crowd_wisdom_is_small_and_positive():
    spec = ExperimentSpec.preset(
        "Toy4Exp", "desk", split=PeriodSplit(n1=1000, n2=1000, n3=2000), m=20, workers=4
    )
    bundle = run_experiment(spec)
    table = bundle.table_metrics()

    for label in _labels(4, 5):
        for alpha in spec.levels:
            diag = bundle.wisdom[(label, alpha)]
            assert 0.0 < diag.mean_ri < 0.01
    # averaging quantiles never scores worse than the mean sister
    for label in _labels(1, 2, 3, 4, 5, 6):
        for alpha in spec.levels:
            ens = table[label][alpha].ais
            sisters = ens / (1.0 - bundle.wisdom[(label, alpha)].ri_values)
            assert ens <= sisters.mean() * (1 + 1e-9)
    qr = table[BenchmarkScheme.QUANTILE_REGRESSION.value][0.01].ais
    for label in _labels(1, 2, 3, 4, 5, 6):
        assert table[label][0.01].ais < 0.6 * qr


def test_short_series_study_ordering():
    spec = ExperimentSpec.preset("AddType1", "desk", repetitions=40, m=20, workers=4, bayesian_draws=200)
    avg = run_experiment(spec).average_metrics()
    ais = {label: metrics[0.01].ais for label, metrics in avg.items()}

    lr = ais[BenchmarkScheme.LINEAR_REGRESSION.value]
    strong = [ais[label] for label in _labels(1, 2, 3)]
    strong += [lr, ais[BenchmarkScheme.BAYESIAN_REGRESSION.value]]
    assert min(ais[label] for label in _labels(4, 5, 6)) > max(strong)
    for label in _labels(1, 2, 3):
        assert ais[label] == pytest.approx(lr, rel=0.05)


def test_noninformative_study_ordering():
    spec = ExperimentSpec.preset("AddType2", "desk", repetitions=60, m=20, workers=4, bayesian_draws=200)
    avg = run_experiment(spec).average_metrics()
    ais = {label: metrics[0.01].ais for label, metrics in avg.items()}

    worst = EnsembleScheme.from_number(6).label
    assert max(ais, key=ais.get) == worst
    bnr = avg[BenchmarkScheme.BAYESIAN_NON_REGRESSION.value][0.05]
    assert bnr.cp == pytest.approx(0.95, abs=0.03)


# ───────────────────── full-scale reproduction ───────────────────── #

@pytest.mark.slow
def test_toy1_full_scale_ordering():
    bundle = run_experiment(ExperimentSpec.preset("Toy1Exp"))
    table = bundle.table_metrics()
    for alpha in (0.01, 0.05, 0.2):
        assert table["ensemble_scheme_1"][alpha].cp == pytest.approx(1 - alpha, abs=0.02)
        bench = table["linear_regression_benchmark"][alpha].ais
        assert table["ensemble_scheme_1"][alpha].ais == pytest.approx(bench, rel=0.05)


@pytest.mark.slow
def test_toy4_beats_toy3_with_quantile_error_model():
    toy3 = run_experiment(ExperimentSpec.preset("Toy3Exp")).table_metrics()
    toy4 = run_experiment(ExperimentSpec.preset("Toy4Exp")).table_metrics()
    for alpha in (0.01, 0.05, 0.2):
        assert toy4["ensemble_scheme_5"][alpha].ais < toy3["ensemble_scheme_5"][alpha].ais
