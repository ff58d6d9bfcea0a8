"""
ensquant.ensemble.error_models
------------------------------
Error models M: regressions of the sister error on the sister prediction
that yield conditional error quantiles. New models plug in through
`@register`.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Dict, Optional, Sequence, Type

import numpy as np

from ..config import RegressSettings
from ..errors import ConfigurationError, ShapeError
from ..models.regress import DesignKind, OlsFit, QuantileFit, ols_fit, ols_quantile, qr_fit, qr_predict


class ErrorModel(ABC):
    name: str

    def __init__(self, settings: Optional[RegressSettings] = None):
        self.settings = settings or RegressSettings()
        self.probabilities: tuple[float, ...] = ()

    @abstractmethod
    def fit(self, zeta: np.ndarray, eps: np.ndarray, probabilities: Sequence[float]) -> "ErrorModel":
        ...

    @abstractmethod
    def predict_quantiles(self, zeta: np.ndarray) -> np.ndarray:
        """|probabilities| x len(zeta) error quantiles at the trained probabilities."""
        ...


ERROR_MODEL_REGISTRY: Dict[str, Type[ErrorModel]] = {}


def register(model_cls: Type[ErrorModel]) -> Type[ErrorModel]:
    ERROR_MODEL_REGISTRY[model_cls.name] = model_cls
    return model_cls


def build_error_model(name: str, settings: Optional[RegressSettings] = None) -> ErrorModel:
    try:
        return ERROR_MODEL_REGISTRY[name](settings)
    except KeyError:
        raise ConfigurationError(
            f"Unknown error model '{name}'. Registered: {', '.join(sorted(ERROR_MODEL_REGISTRY))}"
        ) from None


@register
class LinearRegressionErrorModel(ErrorModel):
    """OLS of eps on zeta; quantiles from the large-sample normal interval."""

    name = "linear_regression"

    def fit(self, zeta, eps, probabilities):
        self.fit_: OlsFit = ols_fit(zeta, eps, DesignKind.LINEAR)
        self.probabilities = tuple(float(p) for p in probabilities)
        return self

    def predict_quantiles(self, zeta):
        return np.vstack([ols_quantile(self.fit_, zeta, p) for p in self.probabilities])


@register
class QuantileRegressionErrorModel(ErrorModel):
    """One linear quantile regression of eps on zeta per probability."""

    name = "quantile_regression"

    def fit(self, zeta, eps, probabilities):
        s = self.settings
        self.fits_: list[QuantileFit] = [
            qr_fit(
                zeta, eps, float(p), DesignKind.LINEAR,
                simplex_max_rows=s.simplex_max_rows, tol=s.ipm_tolerance, max_iter=s.ipm_max_iter,
            )
            for p in probabilities
        ]
        self.probabilities = tuple(float(p) for p in probabilities)
        return self

    def predict_quantiles(self, zeta):
        zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
        if not self.fits_:
            raise ShapeError("quantile regression error model has no fitted probabilities")
        return np.vstack([qr_predict(f, zeta) for f in self.fits_])
