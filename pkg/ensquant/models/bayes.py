"""
ensquant.models.bayes
---------------------
Bayesian machinery for the normal linear model under the prior
p(theta, sigma2) ∝ 1/sigma2:

* Gibbs sampler alternating
      theta  | sigma2 ~ N((X'X)^-1 X'y, sigma2 (X'X)^-1)
      sigma2 | theta  ~ Inv-Gamma(n/2, (y - X theta)'(y - X theta)/2)
* posterior-predictive quantiles (mixture-of-normals CDF inversion)
* the Student-t "non-regression" benchmark for y ~ N(mu, sigma2) with a
  flat prior on (mu, log sigma).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, Field
from scipy.special import ndtr, stdtrit

from ..errors import DomainError, InsufficientDataError, ShapeError, SingularityError
from ..simulate import normal_variates, rng_stream
from .regress import ArrayLike, DesignKind, design_matrix, inv_norm_cdf

_SIGMA2_FLOOR = np.finfo(float).tiny


@dataclass(frozen=True)
class PosteriorDraws:
    theta: np.ndarray   # m x k
    sigma2: np.ndarray  # m

    def __post_init__(self):
        if self.theta.ndim != 2 or self.theta.shape[0] != self.sigma2.shape[0]:
            raise ShapeError(f"theta {self.theta.shape} and sigma2 {self.sigma2.shape} disagree on m")
        if np.any(self.sigma2 <= 0):
            raise DomainError("sigma2 draws must be strictly positive")

    @property
    def m(self) -> int:
        return int(self.sigma2.shape[0])

    def to_frame(self) -> pd.DataFrame:
        """`k,theta0,theta1[,theta2],sigma2`, k counted from 1."""
        frame = pd.DataFrame(self.theta, columns=[f"theta{j}" for j in range(self.theta.shape[1])])
        frame.insert(0, "k", np.arange(1, self.m + 1))
        frame["sigma2"] = self.sigma2
        return frame


class GibbsConfig(BaseModel):
    m: int = Field(1000, ge=1)
    burn_in: int = Field(100, ge=0)
    seed: int = Field(0, ge=0)
    stream: str = "posterior"

    model_config = {"extra": "forbid", "frozen": True}


def gibbs_sample(
    x: ArrayLike,
    y: ArrayLike,
    design: DesignKind = DesignKind.LINEAR,
    config: GibbsConfig = GibbsConfig(),
) -> PosteriorDraws:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ShapeError(f"x has {x.size} values but y has {y.size}")
    X = design_matrix(x, design)
    n, k = X.shape
    if n <= k:
        raise InsufficientDataError(f"Gibbs sampler with {k} coefficients needs more than {k} rows, got {n}")

    XtX = X.T @ X
    if np.linalg.matrix_rank(XtX) < k:
        raise SingularityError("gibbs_sample: X'X is singular")
    XtX_inv = np.linalg.inv(XtX)
    chol = np.linalg.cholesky(XtX_inv)
    theta_hat = XtX_inv @ (X.T @ y)

    rng = rng_stream(config.seed, config.stream)
    resid = y - X @ theta_hat
    sigma2 = max(float(resid @ resid) / (n - k), _SIGMA2_FLOOR)
    shape = n / 2.0

    theta_out = np.empty((config.m, k))
    sigma2_out = np.empty(config.m)
    for it in range(config.burn_in + config.m):
        theta = theta_hat + np.sqrt(sigma2) * (chol @ normal_variates(rng, k))
        resid = y - X @ theta
        rate = 0.5 * float(resid @ resid)
        sigma2 = max(rate / rng.gamma(shape, 1.0), _SIGMA2_FLOOR)
        j = it - config.burn_in
        if j >= 0:
            theta_out[j] = theta
            sigma2_out[j] = sigma2

    logger.debug("gibbs_sample: n={} k={} m={} burn_in={}", n, k, config.m, config.burn_in)
    return PosteriorDraws(theta=theta_out, sigma2=sigma2_out)


def posterior_interval(draws: PosteriorDraws, index: int, level: float = 0.90) -> Tuple[float, float]:
    """Equal-tailed credible interval of coefficient `index`."""
    if not 0.0 < level < 1.0:
        raise DomainError(f"credible level must lie in (0, 1), got {level}")
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(draws.theta[:, index], [tail, 1.0 - tail])
    return float(lo), float(hi)


# ───────────────────── posterior predictive quantiles ───────────────────── #

def _mixture_quantiles(mu: np.ndarray, sd: np.ndarray, p: float, tol: float, max_iter: int) -> np.ndarray:
    """Solve mean_k Phi((q - mu_k)/sd_k) = p column-wise; mu is m x T, sd is m x 1.

    Safeguarded Newton: a Newton step is taken when it stays inside the
    current bracket, otherwise the bracket is bisected.
    """
    lo = np.min(mu - 40.0 * sd, axis=0)
    hi = np.max(mu + 40.0 * sd, axis=0)
    spread = np.sqrt(np.mean(sd**2) + np.var(mu, axis=0))
    q = np.clip(np.mean(mu, axis=0) + spread * inv_norm_cdf(p), lo, hi)
    inv_sd = 1.0 / sd
    for _ in range(max_iter):
        zs = (q - mu) * inv_sd
        F = np.mean(ndtr(zs), axis=0)
        err = F - p
        if np.all(np.abs(err) < tol):
            break
        above = err > 0
        hi = np.where(above, q, hi)
        lo = np.where(above, lo, q)
        dens = np.mean(np.exp(-0.5 * zs * zs) * inv_sd, axis=0) / np.sqrt(2.0 * np.pi)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = q - err / dens
        ok = np.isfinite(newton) & (newton > lo) & (newton < hi)
        q = np.where(ok, newton, 0.5 * (lo + hi))
    return q


def posterior_predictive_quantiles(
    draws: PosteriorDraws,
    x_new: ArrayLike,
    probabilities: Sequence[float],
    design: DesignKind = DesignKind.LINEAR,
    *,
    tol: float = 1e-9,
    max_iter: int = 200,
    chunk: int = 1024,
) -> np.ndarray:
    """|probabilities| x len(x_new) matrix of predictive quantiles."""
    probs = np.asarray(probabilities, dtype=float)
    if np.any(~((probs > 0) & (probs < 1))):
        raise DomainError(f"probabilities must lie in (0, 1), got {probabilities!r}")
    if draws.m == 0:
        raise InsufficientDataError("no posterior draws")
    X = design_matrix(x_new, design)
    sd = np.sqrt(draws.sigma2)[:, None]
    out = np.empty((probs.size, X.shape[0]))

    if draws.m == 1:
        centre = X @ draws.theta[0]
        for i, p in enumerate(probs):
            out[i] = centre + sd[0, 0] * inv_norm_cdf(p)
        return out

    for start in range(0, X.shape[0], chunk):
        block = slice(start, start + chunk)
        mu = draws.theta @ X[block].T
        for i, p in enumerate(probs):
            out[i, block] = _mixture_quantiles(mu, sd, float(p), tol, max_iter)
    return out


def posterior_predictive_quantile(
    draws: PosteriorDraws, x_new: float, p: float, design: DesignKind = DesignKind.LINEAR
) -> float:
    return float(posterior_predictive_quantiles(draws, [x_new], [p], design)[0, 0])


# ─────────────────────── Student-t non-regression ─────────────────────── #

@dataclass(frozen=True)
class TNonRegFit:
    location: float
    scale: float
    df: int


def student_t_ppf(p: Union[float, np.ndarray], df: float) -> Union[float, np.ndarray]:
    arr = np.asarray(p, dtype=float)
    if np.any(~((arr > 0) & (arr < 1))):
        raise DomainError(f"Student-t quantile needs 0 < p < 1, got {p!r}")
    if df <= 0:
        raise DomainError(f"degrees of freedom must be positive, got {df}")
    out = stdtrit(df, arr)
    return float(out) if np.ndim(out) == 0 else out


def t_nonreg_fit(y: ArrayLike) -> TNonRegFit:
    y = np.asarray(y, dtype=float).ravel()
    n = y.size
    if n < 2:
        raise InsufficientDataError(f"non-regression benchmark needs at least 2 values, got {n}")
    scale = np.sqrt(1.0 + 1.0 / n) * float(np.std(y, ddof=1))
    return TNonRegFit(location=float(np.mean(y)), scale=float(scale), df=n - 1)


def t_nonreg_quantile(fit: TNonRegFit, p: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    return fit.location + fit.scale * student_t_ppf(p, fit.df)
