"""
ensquant.ensemble.sisters
-------------------------
Sister predictions (one point-prediction series per parameter draw) and
their errors against the observations of the error-model training period.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientDataError, ShapeError
from ..models.regress import ArrayLike, DesignKind, design_matrix


@dataclass(frozen=True)
class SisterMatrix:
    values: np.ndarray  # m x (n2 + n3)
    n2: int

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ShapeError(f"sister values must be a matrix, got shape {self.values.shape}")
        if not 0 <= self.n2 <= self.values.shape[1]:
            raise ShapeError(f"n2={self.n2} outside the {self.values.shape[1]} sister columns")

    @property
    def m(self) -> int:
        return int(self.values.shape[0])

    @property
    def n3(self) -> int:
        return int(self.values.shape[1] - self.n2)

    @property
    def t2(self) -> np.ndarray:
        return self.values[:, : self.n2]

    @property
    def t3(self) -> np.ndarray:
        return self.values[:, self.n2 :]


@dataclass(frozen=True)
class ErrorMatrix:
    values: np.ndarray  # m x n2, prediction minus observation

    @property
    def m(self) -> int:
        return int(self.values.shape[0])


def make_sister_predictions(
    theta: np.ndarray, x: ArrayLike, design: DesignKind = DesignKind.LINEAR, n2: int = 0
) -> SisterMatrix:
    """Row k is the design of `x` (T2 then T3) applied to coefficient row k."""
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    x = np.asarray(x, dtype=float).ravel()
    if theta.shape[0] == 0 or x.size == 0:
        raise InsufficientDataError("sister predictions need at least one draw and one time step")
    X = design_matrix(x, design)
    if theta.shape[1] != X.shape[1]:
        raise ShapeError(f"{theta.shape[1]} coefficients per draw but the {design.value} design has {X.shape[1]}")
    return SisterMatrix(values=theta @ X.T, n2=n2)


def compute_errors(sisters: SisterMatrix, y_t2: ArrayLike) -> ErrorMatrix:
    y_t2 = np.asarray(y_t2, dtype=float).ravel()
    if y_t2.size != sisters.n2:
        raise ShapeError(f"T2 block has {sisters.n2} columns but y_T2 has {y_t2.size} values")
    return ErrorMatrix(values=sisters.t2 - y_t2[None, :])
