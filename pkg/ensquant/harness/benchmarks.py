"""
ensquant.harness.benchmarks
---------------------------
Benchmarks trained directly on T1 u T2 and applied on T3.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..config import RegressSettings
from ..ensemble.surface import DEFAULT_PROBABILITIES, QuantileSurface
from ..errors import ConfigurationError
from ..models.bayes import GibbsConfig, gibbs_sample, posterior_predictive_quantiles, t_nonreg_fit, t_nonreg_quantile
from ..models.regress import DesignKind, ols_fit, ols_quantile, qr_fit, qr_predict
from ..simulate import ToyDataset
from .experiments import BenchmarkScheme


def run_benchmark(
    scheme: BenchmarkScheme,
    dataset: ToyDataset,
    design: DesignKind = DesignKind.LINEAR,
    *,
    probabilities: Sequence[float] = DEFAULT_PROBABILITIES,
    seed: int = 0,
    draws: int = 1000,
    burn_in: int = 100,
    fit_size: int = 200,
    settings: Optional[RegressSettings] = None,
) -> QuantileSurface:
    dataset.split.require_runnable()
    probs = tuple(float(p) for p in probabilities)
    x12, y12 = dataset.period("t12")
    x3, _ = dataset.period("t3")

    if scheme is BenchmarkScheme.LINEAR_REGRESSION:
        fit = ols_fit(x12, y12, design)
        values = np.vstack([ols_quantile(fit, x3, p) for p in probs])

    elif scheme is BenchmarkScheme.QUANTILE_REGRESSION:
        s = settings or RegressSettings()
        fits = [
            qr_fit(x12, y12, p, design, simplex_max_rows=s.simplex_max_rows, tol=s.ipm_tolerance, max_iter=s.ipm_max_iter)
            for p in probs
        ]
        values = np.vstack([qr_predict(f, x3) for f in fits])

    elif scheme is BenchmarkScheme.BAYESIAN_REGRESSION:
        posterior = gibbs_sample(
            x12, y12, design, GibbsConfig(m=draws, burn_in=burn_in, seed=seed, stream="benchmark")
        )
        values = posterior_predictive_quantiles(posterior, x3, probs, design)

    elif scheme is BenchmarkScheme.BAYESIAN_NON_REGRESSION:
        fit = t_nonreg_fit(y12[:fit_size])
        q = np.asarray(t_nonreg_quantile(fit, np.asarray(probs)), dtype=float)
        values = np.repeat(q[:, None], x3.size, axis=1)

    else:
        raise ConfigurationError(f"Unknown benchmark scheme '{scheme}'")

    return QuantileSurface(probs, values)
