import numpy as np
import pytest

from ensquant.errors import ConfigurationError, ShapeError, SingularityError, StageError
from ensquant.ensemble import (
    ERROR_MODEL_REGISTRY,
    DEFAULT_PROBABILITIES,
    EnsembleScheme,
    ErrorMatrix,
    ErrorModel,
    ErrorModelKind,
    QuantileSurface,
    SisterMatrix,
    TrainedErrorModels,
    VariantMode,
    average_quantiles,
    build_error_model,
    compute_errors,
    make_sister_predictions,
    predict_auxiliary_quantiles,
    prepare_inputs,
    read_surface_csv,
    run_scheme,
    train_error_models,
)
from ensquant.models.regress import DesignKind, inv_norm_cdf
from ensquant.score import DEFAULT_LEVELS, interval_scores
from ensquant.simulate import Family, PeriodSplit, SimulatorSpec, simulate

PROBS = DEFAULT_PROBABILITIES


class _ConstantErrors(ErrorModel):
    """Error quantiles that ignore zeta: e_p = c * Phi^-1(p)."""

    name = "constant_test"

    def __init__(self, c: float):
        super().__init__()
        self.c = c

    def fit(self, zeta, eps, probabilities):
        self.probabilities = tuple(probabilities)
        return self

    def predict_quantiles(self, zeta):
        return np.vstack([np.full(len(zeta), self.c * inv_norm_cdf(p)) for p in self.probabilities])


def _trained(c, m=1):
    model = _ConstantErrors(c).fit(None, None, PROBS)
    return TrainedErrorModels(VariantMode.POOLED, (model,))


# ─── sister predictions and errors ─── #

def test_sister_predictions_linear():
    s = make_sister_predictions(np.array([[5.0, 2.0]]), [0.0, 1.0])
    np.testing.assert_array_equal(s.values, [[5.0, 7.0]])


def test_identical_draws_give_identical_rows(rng):
    theta = np.repeat(rng.normal(size=(1, 3)), 4, axis=0)
    s = make_sister_predictions(theta, rng.normal(size=9), DesignKind.QUADRATIC, n2=5)
    assert np.all(s.values == s.values[0])
    assert s.t2.shape == (4, 5) and s.t3.shape == (4, 4)


def test_sister_cells_match_scalar_recomputation(rng):
    theta = rng.normal(size=(6, 3))
    x = rng.normal(size=8)
    s = make_sister_predictions(theta, x, DesignKind.QUADRATIC)
    for k in range(6):
        for t in range(8):
            assert s.values[k, t] == pytest.approx(theta[k, 0] + theta[k, 1] * x[t] + theta[k, 2] * x[t] ** 2, rel=1e-12)


def test_errors_are_prediction_minus_observation(rng):
    s = SisterMatrix(values=np.array([[7.0, 1.0]]), n2=1)
    np.testing.assert_array_equal(compute_errors(s, [5.0]).values, [[2.0]])
    y = rng.normal(size=4)
    perfect = SisterMatrix(values=np.vstack([np.append(y, 9.0)] * 3), n2=4)
    assert np.all(compute_errors(perfect, y).values == 0)
    vals = rng.normal(size=(5, 6))
    y6 = rng.normal(size=6)
    e = compute_errors(SisterMatrix(values=vals, n2=6), y6)
    assert e.values.sum() == pytest.approx(vals.sum() - 5 * y6.sum(), rel=1e-9, abs=1e-12)


def test_errors_length_mismatch():
    with pytest.raises(ShapeError):
        compute_errors(SisterMatrix(values=np.zeros((2, 5)), n2=3), [1.0, 2.0])


# ─── schemes ─── #

def test_scheme_numbering():
    assert [s.number for s in EnsembleScheme.all()] == [1, 2, 3, 4, 5, 6]
    s5 = EnsembleScheme.from_number(5)
    assert s5.variant is VariantMode.POOLED and s5.error_model is ErrorModelKind.QUANTILE_REGRESSION
    assert s5.label == "ensemble_scheme_5"
    with pytest.raises(ValueError):
        EnsembleScheme.from_number(7)


def test_error_model_registry():
    assert {"linear_regression", "quantile_regression"} <= set(ERROR_MODEL_REGISTRY)
    with pytest.raises(ConfigurationError):
        build_error_model("neural_net")


# ─── training ─── #

def _sisters(rng, m, n2, n3):
    x = rng.normal(size=n2 + n3)
    theta = np.column_stack([5 + 0.1 * rng.normal(size=m), 2 + 0.1 * rng.normal(size=m)])
    s = make_sister_predictions(theta, x, n2=n2)
    y2 = 5 + 2 * x[:n2] + rng.normal(size=n2)
    return s, compute_errors(s, y2)


def test_training_set_sizes(rng):
    s, e = _sisters(rng, m=4, n2=25, n3=5)
    per = train_error_models(VariantMode.PER_SISTER, s, e, ErrorModelKind.LINEAR_REGRESSION)
    pooled = train_error_models(VariantMode.POOLED, s, e, ErrorModelKind.LINEAR_REGRESSION)
    single = train_error_models(VariantMode.SINGLE_RANDOM, s, e, ErrorModelKind.LINEAR_REGRESSION, seed=3)
    assert len(per.models) == 4 and [m.fit_.n_train for m in per.models] == [25] * 4
    assert len(pooled.models) == 1 and pooled.models[0].fit_.n_train == 100
    assert len(single.models) == 1 and single.models[0].fit_.n_train == 25
    assert 0 <= single.k0 < 4


def test_single_random_k0_is_seeded(rng):
    s, e = _sisters(rng, m=10, n2=12, n3=3)
    a = train_error_models(VariantMode.SINGLE_RANDOM, s, e, ErrorModelKind.LINEAR_REGRESSION, seed=42)
    b = train_error_models(VariantMode.SINGLE_RANDOM, s, e, ErrorModelKind.LINEAR_REGRESSION, seed=42)
    assert a.k0 == b.k0


def test_identical_sisters_train_identical_models(rng):
    s, e = _sisters(rng, m=1, n2=30, n3=4)
    s2 = SisterMatrix(values=np.vstack([s.values, s.values]), n2=s.n2)
    e2 = ErrorMatrix(values=np.vstack([e.values, e.values]))
    trained = train_error_models(VariantMode.PER_SISTER, s2, e2, ErrorModelKind.QUANTILE_REGRESSION)
    for fa, fb in zip(trained.models[0].fits_, trained.models[1].fits_):
        np.testing.assert_array_equal(fa.coefficients, fb.coefficients)


def test_constant_prediction_names_the_sister(rng):
    s, e = _sisters(rng, m=3, n2=10, n3=2)
    values = s.values.copy()
    values[1, : s.n2] = 4.0
    with pytest.raises(SingularityError) as info:
        train_error_models(VariantMode.PER_SISTER, SisterMatrix(values, s.n2), e, ErrorModelKind.QUANTILE_REGRESSION)
    assert info.value.sister_index == 1


def test_grid_without_reflection_pairs(rng):
    s, e = _sisters(rng, m=2, n2=10, n3=2)
    with pytest.raises(ConfigurationError):
        train_error_models(VariantMode.POOLED, s, e, ErrorModelKind.LINEAR_REGRESSION, probabilities=[0.05, 0.9])


# ─── auxiliary quantiles and averaging ─── #

def test_constant_errors_give_symmetric_band(rng):
    s = make_sister_predictions(np.array([[1.0, 1.0], [0.0, 2.0]]), rng.normal(size=5), n2=2)
    surfaces = predict_auxiliary_quantiles(_trained(0.5), s, PROBS)
    for k, surf in enumerate(surfaces):
        for p in PROBS:
            np.testing.assert_allclose(surf.quantile(p), s.t3[k] + 0.5 * inv_norm_cdf(p), rtol=1e-12)


def test_zero_error_model_is_identity(rng):
    s = make_sister_predictions(rng.normal(size=(3, 2)), rng.normal(size=7), n2=3)
    for k, surf in enumerate(predict_auxiliary_quantiles(_trained(0.0), s, PROBS)):
        assert np.all(surf.values == s.t3[k])


def test_tiny_linear_pipeline_by_hand():
    """m=2, n2=4, n3=2 with closed-form OLS and normal quantiles."""
    theta = np.array([[1.0, 2.0], [0.5, 1.5]])
    x = np.array([0.0, 1.0, 2.0, 3.0, 0.5, -1.0])
    y2 = np.array([1.2, 2.7, 5.4, 6.9])
    s = make_sister_predictions(theta, x, n2=4)
    e = compute_errors(s, y2)
    trained = train_error_models(VariantMode.PER_SISTER, s, e, ErrorModelKind.LINEAR_REGRESSION, PROBS)
    surfaces = predict_auxiliary_quantiles(trained, s, PROBS)
    for k in range(2):
        zeta, eps = s.t2[k], e.values[k]
        zb, eb = zeta.mean(), eps.mean()
        slope = np.sum((zeta - zb) * (eps - eb)) / np.sum((zeta - zb) ** 2)
        icpt = eb - slope * zb
        mse = np.sum((eps - icpt - slope * zeta) ** 2) / 2
        z3 = s.t3[k]
        for p in PROBS:
            e_refl = icpt + slope * z3 + inv_norm_cdf(1 - p) * np.sqrt(mse)
            np.testing.assert_allclose(surfaces[k].quantile(p), z3 - e_refl, atol=1e-9)


def test_average_identity_and_symmetry(rng):
    a = QuantileSurface(PROBS, np.sort(rng.normal(size=(10, 6)), axis=0))
    assert np.all(average_quantiles([a]).values == a.values)
    neg = QuantileSurface(PROBS, -a.values[::-1])
    flipped = QuantileSurface(PROBS, a.values[::-1].copy())
    np.testing.assert_allclose(average_quantiles([flipped, neg]).values, 0.0, atol=1e-15)


def test_average_matches_cellwise_mean(rng):
    vals = rng.normal(size=(5, 10, 7))
    out = average_quantiles(QuantileSurface(PROBS, v) for v in vals)
    np.testing.assert_allclose(out.values, vals.mean(axis=0), rtol=1e-12)


def test_average_grid_mismatch(rng):
    a = QuantileSurface(PROBS, rng.normal(size=(10, 3)))
    b = QuantileSurface(PROBS, rng.normal(size=(10, 4)))
    with pytest.raises(ShapeError):
        average_quantiles([a, b])


def test_surface_interval_and_csv(tmp_path, rng):
    surf = QuantileSurface(PROBS, np.sort(rng.normal(size=(10, 4)), axis=0))
    lo, hi = surf.interval(0.05)
    np.testing.assert_array_equal(lo, surf.values[2])
    np.testing.assert_array_equal(hi, surf.values[7])
    path = surf.to_csv(tmp_path / "s.csv")
    assert path.read_text().splitlines()[0].startswith("t,p_0.005,p_0.0125,p_0.025")
    back = read_surface_csv(path)
    assert back.probabilities == surf.probabilities
    np.testing.assert_array_equal(back.values, surf.values)


# ─── end to end ─── #

def _small(seed=5, n=(80, 80, 30), family=Family.TOY1):
    return simulate(SimulatorSpec(family=family, n=sum(n), seed=seed), PeriodSplit(n1=n[0], n2=n[1], n3=n[2]))


def test_single_sister_collapses_variants():
    ds = _small()
    for models in ((1, 2, 3), (4, 5, 6)):
        finals = [run_scheme(EnsembleScheme.from_number(i), ds, m=1, seed=8).final.values for i in models]
        for f in finals[1:]:
            np.testing.assert_array_equal(f, finals[0])


def test_run_scheme_is_deterministic():
    ds = _small()
    a = run_scheme(EnsembleScheme.from_number(3), ds, m=20, seed=2)
    b = run_scheme(EnsembleScheme.from_number(3), ds, m=20, seed=2)
    np.testing.assert_array_equal(a.final.values, b.final.values)
    assert a.k0 == b.k0


def test_kept_sisters_average_to_final():
    ds = _small()
    seen = []
    res = run_scheme(
        EnsembleScheme.from_number(4), ds, m=6, seed=1, keep_sisters=True, on_sister=lambda k, s: seen.append(k)
    )
    assert seen == list(range(6))
    assert len(res.per_sister) == 6
    np.testing.assert_allclose(res.final.values, np.mean([s.values for s in res.per_sister], axis=0), rtol=1e-12)
    assert res.crossings == res.final.crossings()


def test_schemes_share_prepared_inputs():
    ds = _small()
    inputs = prepare_inputs(ds, DesignKind.LINEAR, 10, seed=4)
    a = run_scheme(EnsembleScheme.from_number(2), ds, m=10, seed=4, inputs=inputs)
    b = run_scheme(EnsembleScheme.from_number(2), ds, m=10, seed=4)
    np.testing.assert_array_equal(a.final.values, b.final.values)


def test_shift_equivariance_linear_error_model():
    ds = _small(n=(40, 40, 10))
    c = 12.5
    for number in (1, 2, 3):
        scheme = EnsembleScheme.from_number(number)
        a = run_scheme(scheme, ds, m=5, seed=6).final.values
        b = run_scheme(scheme, ds.shifted(c), m=5, seed=6).final.values
        np.testing.assert_allclose(b - a, c, atol=1e-8)


def test_crowd_wisdom_holds_for_every_scheme():
    ds = _small(seed=21, family=Family.TOY2)
    _, y3 = ds.period("t3")
    inputs = prepare_inputs(ds, DesignKind.LINEAR, 15, seed=21)
    for scheme in EnsembleScheme.all():
        per_sister = {a: [] for a in DEFAULT_LEVELS}

        def score(k, surf):
            for a, v in interval_scores(surf, y3, DEFAULT_LEVELS).items():
                per_sister[a].append(v)

        res = run_scheme(scheme, ds, m=15, seed=21, inputs=inputs, on_sister=score)
        final = interval_scores(res.final, y3, DEFAULT_LEVELS)
        for a in DEFAULT_LEVELS:
            assert final[a] <= np.mean(per_sister[a]) + 1e-9


def test_stage_failures_are_labelled():
    ds = _small()
    x = ds.x.copy()
    x[:80] = 1.0  # constant predictor over T1
    bad = type(ds)(x=x, y=ds.y, split=ds.split)
    with pytest.raises(StageError) as info:
        run_scheme(EnsembleScheme.from_number(1), bad, m=3, seed=1)
    assert info.value.stage == "gibbs"
    assert isinstance(info.value.cause, SingularityError)
