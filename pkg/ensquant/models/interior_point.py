"""
ensquant.models.interior_point
------------------------------
Frisch–Newton interior-point solver for large quantile-regression problems.

Works on the bounded dual of the check-loss LP,

    min  c'a   s.t.  A a = b,  0 <= a <= 1
    c = -y,  A = X',  b = (1 - p) X'1,

with a Mehrotra predictor–corrector step. Every iteration only needs the
k x k matrix A diag(q) A', so the cost is linear in the number of rows.
The regression coefficients are minus the equality multipliers.

The stopping rule is on the complementarity gap x'z + s'w relative to
sum|y|, the largest value |c'a| can take on the box. The primal residual
b - A a enters every right-hand side, so round-off in the k x k solves
never accumulates into the gap.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np
from loguru import logger

from ..errors import ConvergenceError

_STEP_SHRINK = 0.99995
_START_EPS = 1e-3


def _max_step(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0
    if not np.any(neg):
        return 1e20
    return float(np.min(-v[neg] / dv[neg]))


def _step_lengths(x, dx, s, ds, z, dz, w, dw) -> Tuple[float, float]:
    fp = min(_STEP_SHRINK * min(_max_step(x, dx), _max_step(s, ds)), 1.0)
    fd = min(_STEP_SHRINK * min(_max_step(w, dw), _max_step(z, dz)), 1.0)
    return fp, fd


def frisch_newton(
    X: np.ndarray,
    y: np.ndarray,
    p: float,
    *,
    tol: float = 1e-8,
    max_iter: int = 500,
) -> Tuple[np.ndarray, float, int]:
    """Return (coefficients, relative complementarity gap, iterations)."""
    n = X.shape[0]
    A = X.T
    c = -y
    b = (1.0 - p) * X.sum(axis=0)
    scale = max(1.0, float(np.abs(y).sum()))

    x = np.full(n, 1.0 - p)
    s = np.full(n, p)
    dual = np.linalg.lstsq(X, c, rcond=None)[0]
    r = c - X @ dual
    near = np.abs(r) < _START_EPS
    z = np.maximum(r, 0.0) + _START_EPS * near
    w = np.maximum(-r, 0.0) + _START_EPS * near

    def rel_gap() -> float:
        return (float(x @ z) + float(s @ w)) / scale

    gap = rel_gap()
    it = 0
    while gap > tol and it < max_iter:
        it += 1
        q = 1.0 / (z / x + w / s)
        r = z - w
        AQA = (A * q) @ X
        rhs = (b - A @ x) + A @ (q * r)
        dy = np.linalg.solve(AQA, rhs)
        dx = q * (X @ dy - r)
        ds = -dx
        dz = -z * (dx / x + 1.0)
        dw = -w * (ds / s + 1.0)
        fp, fd = _step_lengths(x, dx, s, ds, z, dz, w, dw)

        if min(fp, fd) < 1.0:
            # corrector: recenter with the affine second-order terms
            mu = float(z @ x + w @ s)
            g = float((z + fd * dz) @ (x + fp * dx) + (w + fd * dw) @ (s + fp * ds))
            mu = mu * (g / mu) ** 3 / (2.0 * n)
            xinv = 1.0 / x
            sinv = 1.0 / s
            dxdz = dx * dz * xinv
            dsdw = ds * dw * sinv
            xi = mu * (xinv - sinv)
            rhs = rhs + A @ (q * (dxdz - dsdw - xi))
            dy = np.linalg.solve(AQA, rhs)
            dx = q * (X @ dy + xi - r - dxdz + dsdw)
            ds = -dx
            dz = mu * xinv - z - xinv * z * dx - dxdz
            dw = mu * sinv - w - sinv * w * ds - dsdw
            fp, fd = _step_lengths(x, dx, s, ds, z, dz, w, dw)

        x = x + fp * dx
        s = s + fp * ds
        dual = dual + fd * dy
        w = w + fd * dw
        z = z + fd * dz
        gap = rel_gap()

    if gap > tol:
        raise ConvergenceError(
            f"Frisch-Newton stopped after {it} iterations on {n} rows (p={p})", gap
        )
    logger.debug("frisch_newton converged: rows={} p={} iterations={} gap={:.2e}", n, p, it, gap)
    return -dual, gap, it
