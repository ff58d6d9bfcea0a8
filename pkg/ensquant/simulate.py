"""
ensquant.simulate
-----------------
Seeded generation of the toy datasets.

Every stochastic stage of ensquant draws from `rng_stream(seed, label)`:
a Philox (counter-based) generator keyed by SeedSequence(seed, crc32(label)),
so independent stages and parallel jobs never share or perturb a stream.

Laws (x ~ N(0, 1) i.i.d. in every family):
    Toy1            y = 5 + 2x + u,        u ~ N(0, 3^2)
    Toy2            y = 5 + 2x + u,        u ~ N(0, (0.2 (5 + 2x))^2)
    Toy3            y = 5 + 2x + x^2 + u,  u ~ N(0, 1)
    NonInformative  y ~ N(0, 1), independent of x
"""

from __future__ import annotations

import pathlib
import zlib
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, ValidationError, field_validator

from .errors import ConfigurationError, ShapeError
from .models.regress import inv_norm_cdf

_U64_MAX = 2**64 - 1


def rng_stream(seed: int, label: str) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(zlib.crc32(label.encode("utf-8")),))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, label: str) -> int:
    """A 64-bit child seed, e.g. one per repetition."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(zlib.crc32(label.encode("utf-8")),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def normal_variates(rng: np.random.Generator, size: int) -> np.ndarray:
    """Standard normals by inversion of uniforms."""
    u = rng.random(size)
    u[u == 0.0] = np.nextafter(0.0, 1.0)
    return inv_norm_cdf(u) if size else np.empty(0)


class Family(str, Enum):
    TOY1 = "Toy1"
    TOY2 = "Toy2"
    TOY3 = "Toy3"
    NON_INFORMATIVE = "NonInformative"


def parse_family(name: Union[str, Family]) -> Family:
    if isinstance(name, Family):
        return name
    for fam in Family:
        if fam.value.lower() == str(name).lower():
            return fam
    raise ConfigurationError(
        f"Unknown dataset family '{name}'. Supported: {', '.join(f.value for f in Family)}"
    )


class PeriodSplit(BaseModel):
    n1: int = Field(..., ge=0)
    n2: int = Field(..., ge=0)
    n3: int = Field(..., ge=0)

    model_config = {"extra": "forbid", "frozen": True}

    @property
    def n(self) -> int:
        return self.n1 + self.n2 + self.n3

    @property
    def t1(self) -> slice:
        return slice(0, self.n1)

    @property
    def t2(self) -> slice:
        return slice(self.n1, self.n1 + self.n2)

    @property
    def t3(self) -> slice:
        return slice(self.n1 + self.n2, self.n)

    @property
    def t12(self) -> slice:
        return slice(0, self.n1 + self.n2)

    @property
    def t23(self) -> slice:
        return slice(self.n1, self.n)

    def require_runnable(self) -> None:
        if min(self.n1, self.n2, self.n3) < 1:
            raise ConfigurationError(f"every period needs at least one time step, got {self.n1}/{self.n2}/{self.n3}")

    @classmethod
    def default_for(cls, n: int) -> "PeriodSplit":
        if n == 12_000:
            return cls(n1=1_000, n2=1_000, n3=10_000)
        if n == 300:
            return cls(n1=100, n2=100, n3=100)
        n1 = n2 = n // 12
        return cls(n1=n1, n2=n2, n3=n - n1 - n2)

    @classmethod
    def from_tuple(cls, sizes: Tuple[int, int, int]) -> "PeriodSplit":
        n1, n2, n3 = sizes
        return cls(n1=n1, n2=n2, n3=n3)


class SimulatorSpec(BaseModel):
    family: Family
    n: int = Field(..., ge=0)
    seed: int = Field(..., ge=0, le=_U64_MAX)

    model_config = {"extra": "forbid", "frozen": True}

    def __init__(self, **data: Any):
        try:
            super().__init__(**data)
        except ValidationError as e:
            details = "; ".join(
                f"{' -> '.join(map(str, err.get('loc', ())))}: {err.get('msg')}" for err in e.errors()
            )
            raise ConfigurationError(f"Invalid simulator spec: {details}") from e

    @field_validator("family", mode="before")
    @classmethod
    def _family(cls, v: Any) -> Family:
        return parse_family(v)


@dataclass(frozen=True)
class ToyDataset:
    x: np.ndarray
    y: np.ndarray
    split: PeriodSplit

    def __post_init__(self):
        if self.x.shape != self.y.shape:
            raise ShapeError(f"x has {self.x.size} values but y has {self.y.size}")
        if self.split.n != self.x.size:
            raise ShapeError(f"split covers {self.split.n} steps but the series has {self.x.size}")

    @property
    def n(self) -> int:
        return int(self.x.size)

    def period(self, name: str) -> Tuple[np.ndarray, np.ndarray]:
        """(x, y) over 't1', 't2', 't3', 't12' or 't23'."""
        sl = getattr(self.split, name)
        return self.x[sl], self.y[sl]

    def shifted(self, c: float) -> "ToyDataset":
        return ToyDataset(x=self.x, y=self.y + c, split=self.split)

    def to_frame(self) -> pd.DataFrame:
        labels = np.array(["T1"] * self.split.n1 + ["T2"] * self.split.n2 + ["T3"] * self.split.n3)
        return pd.DataFrame({"t": np.arange(1, self.n + 1), "x": self.x, "y": self.y, "period": labels})

    def to_csv(self, path: Union[str, pathlib.Path]) -> pathlib.Path:
        path = pathlib.Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.17g")
        return path


def read_dataset_csv(path: Union[str, pathlib.Path]) -> ToyDataset:
    path = pathlib.Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Dataset CSV not found: {path}")
    frame = pd.read_csv(path)
    missing = {"t", "x", "y", "period"} - set(frame.columns)
    if missing:
        raise ShapeError(f"{path} lacks columns: {', '.join(sorted(missing))}")
    counts = frame["period"].value_counts()
    split = PeriodSplit(n1=int(counts.get("T1", 0)), n2=int(counts.get("T2", 0)), n3=int(counts.get("T3", 0)))
    return ToyDataset(x=frame["x"].to_numpy(float), y=frame["y"].to_numpy(float), split=split)


# ───────────────────────────── laws ───────────────────────────── #

def _toy1(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    return 5.0 + 2.0 * x + 3.0 * z


def _toy2(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    f = 5.0 + 2.0 * x
    return f + 0.2 * np.abs(f) * z


def _toy3(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    return 5.0 + 2.0 * x + x * x + z


def _non_informative(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    return z


_LAWS: Dict[Family, Callable[[np.ndarray, np.ndarray], np.ndarray]] = {
    Family.TOY1: _toy1,
    Family.TOY2: _toy2,
    Family.TOY3: _toy3,
    Family.NON_INFORMATIVE: _non_informative,
}


def simulate(spec: SimulatorSpec, split: Optional[PeriodSplit] = None) -> ToyDataset:
    law = _LAWS.get(spec.family)
    if law is None:
        raise ConfigurationError(f"No generative law registered for family '{spec.family}'")
    split = split or PeriodSplit.default_for(spec.n)
    if split.n != spec.n:
        raise ConfigurationError(f"split sizes sum to {split.n}, expected n={spec.n}")
    x = normal_variates(rng_stream(spec.seed, "x"), spec.n)
    z = normal_variates(rng_stream(spec.seed, "u"), spec.n)
    return ToyDataset(x=x, y=law(x, z), split=split)
