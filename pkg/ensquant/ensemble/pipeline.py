"""
ensquant.ensemble.pipeline
--------------------------
Ensemble post-processing in three variants:

    per_sister     one error model per sister (variant 1)
    pooled         one error model on all (zeta, eps) pairs stacked (variant 2)
    single_random  one error model on a randomly chosen sister k0 (variant 3)

Crossed with two error models this gives schemes 1-6 (1-3 linear regression,
4-6 quantile regression). Stage order for one scheme:

    gibbs (T1) -> sisters (T2 u T3) -> errors (T2) -> train -> predict (T3) -> average
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel

from ..config import RegressSettings
from ..errors import InsufficientDataError, ShapeError, SingularityError, StageError
from ..models.bayes import GibbsConfig, PosteriorDraws, gibbs_sample
from ..models.regress import DesignKind
from ..simulate import ToyDataset, rng_stream
from .error_models import ErrorModel, build_error_model
from .sisters import ErrorMatrix, SisterMatrix, compute_errors, make_sister_predictions
from .surface import DEFAULT_PROBABILITIES, QuantileSurface, reflection_index

SisterCallback = Callable[[int, QuantileSurface], None]


class VariantMode(str, Enum):
    PER_SISTER = "per_sister"
    POOLED = "pooled"
    SINGLE_RANDOM = "single_random"


class ErrorModelKind(str, Enum):
    LINEAR_REGRESSION = "linear_regression"
    QUANTILE_REGRESSION = "quantile_regression"


_VARIANT_ORDER = (VariantMode.PER_SISTER, VariantMode.POOLED, VariantMode.SINGLE_RANDOM)
_MODEL_ORDER = (ErrorModelKind.LINEAR_REGRESSION, ErrorModelKind.QUANTILE_REGRESSION)


class EnsembleScheme(BaseModel):
    variant: VariantMode
    error_model: ErrorModelKind

    model_config = {"extra": "forbid", "frozen": True}

    @property
    def number(self) -> int:
        return 3 * _MODEL_ORDER.index(self.error_model) + _VARIANT_ORDER.index(self.variant) + 1

    @property
    def label(self) -> str:
        return f"ensemble_scheme_{self.number}"

    @classmethod
    def from_number(cls, number: int) -> "EnsembleScheme":
        if not 1 <= number <= 6:
            raise ValueError(f"ensemble schemes are numbered 1-6, got {number}")
        q, r = divmod(number - 1, 3)
        return cls(variant=_VARIANT_ORDER[r], error_model=_MODEL_ORDER[q])

    @classmethod
    def all(cls) -> List["EnsembleScheme"]:
        return [cls.from_number(i) for i in range(1, 7)]


# ───────────────────────────── training ───────────────────────────── #

@dataclass(frozen=True)
class TrainedErrorModels:
    mode: VariantMode
    models: Tuple[ErrorModel, ...]
    k0: Optional[int] = None

    def for_sister(self, k: int) -> ErrorModel:
        return self.models[k] if self.mode is VariantMode.PER_SISTER else self.models[0]


def _check_spread(zeta: np.ndarray, sister_index: Optional[int]) -> None:
    if zeta.size and np.ptp(zeta) == 0.0:
        raise SingularityError("error-model training set has a constant prediction", sister_index=sister_index)


def pick_k0(m: int, seed: int) -> int:
    """Index of the sister used by single_random; drawn from its own stream."""
    return int(rng_stream(seed, "k0").integers(m))


def train_error_models(
    mode: VariantMode,
    sisters: SisterMatrix,
    errors: ErrorMatrix,
    model: ErrorModelKind,
    probabilities: Sequence[float] = DEFAULT_PROBABILITIES,
    *,
    seed: int = 0,
    settings: Optional[RegressSettings] = None,
) -> TrainedErrorModels:
    if errors.values.shape != sisters.t2.shape:
        raise ShapeError(f"errors {errors.values.shape} do not match the T2 sister block {sisters.t2.shape}")
    reflection_index(probabilities)
    zeta2 = sisters.t2

    def fit(zeta, eps, k):
        _check_spread(zeta, k)
        return build_error_model(model.value, settings).fit(zeta, eps, probabilities)

    if mode is VariantMode.PER_SISTER:
        models = tuple(fit(zeta2[k], errors.values[k], k) for k in range(sisters.m))
        return TrainedErrorModels(mode, models)
    if mode is VariantMode.POOLED:
        logger.debug("train_error_models: pooled training on {} pairs", zeta2.size)
        return TrainedErrorModels(mode, (fit(zeta2.ravel(), errors.values.ravel(), None),))
    k0 = pick_k0(sisters.m, seed)
    return TrainedErrorModels(mode, (fit(zeta2[k0], errors.values[k0], k0),), k0=k0)


# ───────────────────────── quantiles & averaging ───────────────────────── #

def iter_auxiliary_quantiles(
    trained: TrainedErrorModels,
    sisters: SisterMatrix,
    probabilities: Sequence[float] = DEFAULT_PROBABILITIES,
) -> Iterator[QuantileSurface]:
    """Yield z_{p,k,t} = zeta_{k,t} - e_{1-p,k,t} over T3, sister by sister."""
    probs = tuple(float(p) for p in probabilities)
    reflect = reflection_index(probs)
    zeta3 = sisters.t3
    for k in range(sisters.m):
        model = trained.for_sister(k)
        if model.probabilities != probs:
            raise ShapeError(f"error model trained on {model.probabilities}, asked for {probs}")
        e = model.predict_quantiles(zeta3[k])
        yield QuantileSurface(probs, zeta3[k][None, :] - e[reflect])


def predict_auxiliary_quantiles(
    trained: TrainedErrorModels,
    sisters: SisterMatrix,
    probabilities: Sequence[float] = DEFAULT_PROBABILITIES,
) -> List[QuantileSurface]:
    return list(iter_auxiliary_quantiles(trained, sisters, probabilities))


def average_quantiles(
    surfaces: Iterable[QuantileSurface], on_surface: Optional[SisterCallback] = None
) -> QuantileSurface:
    """Cell-wise arithmetic mean, accumulated in input order."""
    total: Optional[np.ndarray] = None
    grid: Tuple[float, ...] = ()
    count = 0
    for k, surface in enumerate(surfaces):
        if on_surface is not None:
            on_surface(k, surface)
        if total is None:
            grid, total = surface.probabilities, surface.values.copy()
        else:
            if not np.array_equal(grid, surface.probabilities) or surface.values.shape != total.shape:
                raise ShapeError(f"surface {k} does not share the grid/length of surface 0")
            total += surface.values
        count += 1
    if total is None:
        raise InsufficientDataError("nothing to average")
    return QuantileSurface(grid, total / count if count > 1 else total)


# ───────────────────────────── end to end ───────────────────────────── #

@dataclass(frozen=True)
class EnsembleInputs:
    """Stages shared by all six schemes on one dataset."""

    draws: PosteriorDraws
    sisters: SisterMatrix
    errors: ErrorMatrix


@dataclass
class SchemeResult:
    scheme: EnsembleScheme
    final: QuantileSurface
    per_sister: Optional[List[QuantileSurface]]
    crossings: int
    k0: Optional[int] = None


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as e:
        raise StageError(name, e) from e


def prepare_inputs(
    dataset: ToyDataset,
    design: DesignKind,
    m: int,
    seed: int,
    *,
    burn_in: int = 100,
) -> EnsembleInputs:
    dataset.split.require_runnable()
    x1, y1 = dataset.period("t1")
    x23, _ = dataset.period("t23")
    _, y2 = dataset.period("t2")
    draws = _stage("gibbs", gibbs_sample, x1, y1, design, GibbsConfig(m=m, burn_in=burn_in, seed=seed))
    sisters = _stage("sisters", make_sister_predictions, draws.theta, x23, design, dataset.split.n2)
    errors = _stage("errors", compute_errors, sisters, y2)
    return EnsembleInputs(draws=draws, sisters=sisters, errors=errors)


def run_scheme(
    scheme: EnsembleScheme,
    dataset: ToyDataset,
    design: DesignKind = DesignKind.LINEAR,
    m: int = 1000,
    seed: int = 0,
    *,
    burn_in: int = 100,
    probabilities: Sequence[float] = DEFAULT_PROBABILITIES,
    settings: Optional[RegressSettings] = None,
    inputs: Optional[EnsembleInputs] = None,
    keep_sisters: bool = False,
    on_sister: Optional[SisterCallback] = None,
) -> SchemeResult:
    """Run one ensemble scheme end to end.

    `inputs` lets several schemes share the Gibbs draws, sister matrix and
    errors of a dataset. Per-sister surfaces are returned only with
    `keep_sisters`; `on_sister` sees each one as it is produced.
    """
    if m < 1:
        raise ValueError(f"m must be at least 1, got {m}")
    if inputs is None:
        inputs = prepare_inputs(dataset, design, m, seed, burn_in=burn_in)

    trained = _stage(
        "train", train_error_models, scheme.variant, inputs.sisters, inputs.errors,
        scheme.error_model, probabilities, seed=seed, settings=settings,
    )

    kept: Optional[List[QuantileSurface]] = [] if keep_sisters else None

    def observe(k: int, surface: QuantileSurface) -> None:
        if kept is not None:
            kept.append(surface)
        if on_sister is not None:
            on_sister(k, surface)

    final = _stage(
        "predict", average_quantiles, iter_auxiliary_quantiles(trained, inputs.sisters, probabilities), observe
    )
    crossings = final.crossings()
    if crossings:
        logger.warning("{}: {} quantile crossings in the averaged surface", scheme.label, crossings)
    return SchemeResult(scheme=scheme, final=final, per_sister=kept, crossings=crossings, k0=trained.k0)
