"""
ensquant.models.regress
-----------------------
Frequentist regression kernels: OLS with Gaussian prediction intervals,
the quadratic design expansion, and an exact quantile-regression solver.

Quantile regression is the LP

    min  p * sum(u+) + (1 - p) * sum(u-)   s.t.  X b + u+ - u- = y,  u+, u- >= 0

solved by the HiGHS dual simplex (a vertex, i.e. a fit interpolating k
observations) up to `simplex_max_rows` rows and by the Frisch–Newton
interior-point method above that.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from scipy import sparse
from scipy.optimize import linprog
from scipy.special import ndtri

from ..errors import ConvergenceError, DomainError, InsufficientDataError, ShapeError, SingularityError
from .interior_point import frisch_newton

ArrayLike = Union[float, Sequence[float], np.ndarray]

SIMPLEX_MAX_ROWS = 50_000


class DesignKind(str, Enum):
    LINEAR = "linear"
    QUADRATIC = "quadratic"

    @property
    def n_coefficients(self) -> int:
        return 2 if self is DesignKind.LINEAR else 3


def design_matrix(x: ArrayLike, design: DesignKind) -> np.ndarray:
    """Columns (1, x) or (1, x, x^2)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    cols = [np.ones_like(x), x]
    if design is DesignKind.QUADRATIC:
        cols.append(x * x)
    return np.column_stack(cols)


def inv_norm_cdf(p: ArrayLike) -> Union[float, np.ndarray]:
    """Inverse standard normal CDF on (0, 1)."""
    arr = np.asarray(p, dtype=float)
    if np.any(~((arr > 0.0) & (arr < 1.0))):
        raise DomainError(f"inverse normal CDF needs 0 < p < 1, got {p!r}")
    out = ndtri(arr)
    return float(out) if out.ndim == 0 else out


def _check_xy(x: ArrayLike, y: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ShapeError(f"x has {x.size} values but y has {y.size}")
    return x, y


def _check_rank(X: np.ndarray, what: str) -> None:
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise SingularityError(f"{what}: design matrix is rank deficient")


# ───────────────────────────── OLS ───────────────────────────── #

@dataclass(frozen=True)
class OlsFit:
    coefficients: np.ndarray
    mse: float
    n_train: int
    design: DesignKind

    def predict(self, x_new: ArrayLike) -> np.ndarray:
        return design_matrix(x_new, self.design) @ self.coefficients

    def to_row(self) -> List[Union[str, float]]:
        """`design,p,theta0,theta1[,theta2],loss_or_mse` (p is empty for OLS)."""
        return [self.design.value, "", *map(float, self.coefficients), float(self.mse)]


def ols_fit(x: ArrayLike, y: ArrayLike, design: DesignKind = DesignKind.LINEAR) -> OlsFit:
    x, y = _check_xy(x, y)
    k = design.n_coefficients
    if x.size <= k:
        raise InsufficientDataError(f"OLS with {k} coefficients needs more than {k} rows, got {x.size}")
    X = design_matrix(x, design)
    _check_rank(X, "ols_fit")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    mse = float(resid @ resid) / (x.size - k)
    return OlsFit(coefficients=coef, mse=mse, n_train=int(x.size), design=design)


def ols_predict_interval(fit: OlsFit, x_new: ArrayLike, alpha: float) -> Tuple[np.ndarray, np.ndarray]:
    """Large-sample central (1 - alpha) interval: fitted ± z_{1-alpha/2} * sqrt(mse)."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    centre = fit.predict(x_new)
    half = inv_norm_cdf(1.0 - alpha / 2.0) * np.sqrt(fit.mse)
    lower, upper = centre - half, centre + half
    if np.ndim(x_new) == 0:
        return float(lower[0]), float(upper[0])
    return lower, upper


def ols_quantile(fit: OlsFit, x_new: ArrayLike, p: float) -> np.ndarray:
    """p-quantile under the same normal approximation."""
    return fit.predict(x_new) + inv_norm_cdf(p) * np.sqrt(fit.mse)


# ──────────────────────── quantile regression ──────────────────────── #

@dataclass(frozen=True)
class QuantileFit:
    p: float
    coefficients: np.ndarray
    design: DesignKind
    achieved_loss: float
    method: str = "simplex"

    def to_row(self) -> List[Union[str, float]]:
        return [self.design.value, self.p, *map(float, self.coefficients), float(self.achieved_loss)]


def pinball_loss(y: ArrayLike, fitted: ArrayLike, p: float) -> float:
    """Check loss sum((p - I(y < fitted)) * (y - fitted))."""
    resid = np.asarray(y, dtype=float) - np.asarray(fitted, dtype=float)
    return float(np.sum(resid * (p - (resid < 0))))


def _simplex(X: np.ndarray, y: np.ndarray, p: float) -> np.ndarray:
    n, k = X.shape
    c = np.concatenate([np.zeros(k), np.full(n, p), np.full(n, 1.0 - p)])
    eye = sparse.identity(n, format="csr")
    A_eq = sparse.hstack([sparse.csr_matrix(X), eye, -eye], format="csr")
    bounds = [(None, None)] * k + [(0, None)] * (2 * n)
    res = linprog(c, A_eq=A_eq, b_eq=y, bounds=bounds, method="highs-ds")
    if res.status != 0:
        raise ConvergenceError(f"dual simplex failed on {n} rows (p={p}): {res.message}", float("nan"))
    return np.asarray(res.x[:k])


def qr_fit(
    x: ArrayLike,
    y: ArrayLike,
    p: float,
    design: DesignKind = DesignKind.LINEAR,
    *,
    simplex_max_rows: int = SIMPLEX_MAX_ROWS,
    tol: float = 1e-8,
    max_iter: int = 500,
) -> QuantileFit:
    if not 0.0 < p < 1.0:
        raise DomainError(f"quantile probability must lie in (0, 1), got {p}")
    x, y = _check_xy(x, y)
    k = design.n_coefficients
    if x.size == 0 or x.size < k:
        raise InsufficientDataError(f"quantile regression with {k} coefficients needs at least {k} rows, got {x.size}")
    X = design_matrix(x, design)

    if x.size <= simplex_max_rows:
        coef, method = _simplex(X, y, p), "simplex"
    else:
        coef, gap, it = frisch_newton(X, y, p, tol=tol, max_iter=max_iter)
        method = "interior-point"
        logger.debug("qr_fit: interior point on {} rows, {} iterations", x.size, it)

    return QuantileFit(
        p=float(p),
        coefficients=coef,
        design=design,
        achieved_loss=pinball_loss(y, X @ coef, p),
        method=method,
    )


def qr_predict(fit: QuantileFit, x_new: ArrayLike) -> Union[float, np.ndarray]:
    out = design_matrix(x_new, fit.design) @ fit.coefficients
    return float(out[0]) if np.ndim(x_new) == 0 else out


def quantile_crossings(fits: Iterable[QuantileFit], x: ArrayLike) -> int:
    """Number of (adjacent-p pair, x) cells where a lower-p line lies above a higher-p line."""
    ordered = sorted(fits, key=lambda f: f.p)
    if len(ordered) < 2:
        return 0
    lines = np.vstack([np.atleast_1d(qr_predict(f, x)) for f in ordered])
    return int(np.sum(np.diff(lines, axis=0) < 0))
