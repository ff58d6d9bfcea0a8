"""
ensquant.harness.experiments
----------------------------
Experiment presets. Toy experiments run once on 1000/1000/10000 series;
the two additional studies repeat a 100/100/100 series (500 times at full
scale).

    id        dataset          point model  benchmarks
    Toy1Exp   Toy1             linear       LR, QR, Bayesian regression
    Toy2Exp   Toy2             linear       LR, QR
    Toy3Exp   Toy3             linear       LR, QR
    Toy4Exp   Toy3             quadratic    LR, QR (linear in x)
    AddType1  Toy1             linear       LR, QR, Bayesian regression
    AddType2  NonInformative   linear       LR, QR, Bayesian regression, Bayesian non-regression
"""

from __future__ import annotations

from enum import Enum
from typing import Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, Field, field_validator

from ..config import RegressSettings, Settings, load_config
from ..errors import ConfigurationError
from ..models.regress import DesignKind
from ..simulate import Family, PeriodSplit


class ExperimentId(str, Enum):
    TOY1 = "Toy1Exp"
    TOY2 = "Toy2Exp"
    TOY3 = "Toy3Exp"
    TOY4 = "Toy4Exp"
    ADD_TYPE1 = "AddType1"
    ADD_TYPE2 = "AddType2"


class BenchmarkScheme(str, Enum):
    LINEAR_REGRESSION = "linear_regression_benchmark"
    QUANTILE_REGRESSION = "quantile_regression_benchmark"
    BAYESIAN_REGRESSION = "bayesian_regression_benchmark"
    BAYESIAN_NON_REGRESSION = "bayesian_nonregression_benchmark"


_LR, _QR = BenchmarkScheme.LINEAR_REGRESSION, BenchmarkScheme.QUANTILE_REGRESSION
_BR, _BNR = BenchmarkScheme.BAYESIAN_REGRESSION, BenchmarkScheme.BAYESIAN_NON_REGRESSION

# id -> (family, point-model design, split key, benchmarks, report table)
_PRESETS: Dict[ExperimentId, Tuple[Family, DesignKind, str, Tuple[BenchmarkScheme, ...], str]] = {
    ExperimentId.TOY1: (Family.TOY1, DesignKind.LINEAR, "toy", (_LR, _QR, _BR), "table4"),
    ExperimentId.TOY2: (Family.TOY2, DesignKind.LINEAR, "toy", (_LR, _QR), "table5"),
    ExperimentId.TOY3: (Family.TOY3, DesignKind.LINEAR, "toy", (_LR, _QR), "table6"),
    ExperimentId.TOY4: (Family.TOY3, DesignKind.QUADRATIC, "toy", (_LR, _QR), "table7"),
    ExperimentId.ADD_TYPE1: (Family.TOY1, DesignKind.LINEAR, "additional", (_LR, _QR, _BR), "tableD1"),
    ExperimentId.ADD_TYPE2: (Family.NON_INFORMATIVE, DesignKind.LINEAR, "additional", (_LR, _QR, _BR, _BNR), "tableD2"),
}


def parse_experiment(name: Union[str, ExperimentId]) -> ExperimentId:
    if isinstance(name, ExperimentId):
        return name
    for eid in ExperimentId:
        if eid.value.lower() == str(name).lower():
            return eid
    raise ConfigurationError(
        f"Unknown experiment '{name}'. Available: {', '.join(e.value for e in ExperimentId)}"
    )


class ExperimentSpec(BaseModel):
    id: ExperimentId
    family: Family
    design: DesignKind
    m: int = Field(1000, ge=1)
    seed: int = Field(0, ge=0)
    repetitions: int = Field(1, ge=1)
    split: PeriodSplit
    burn_in: int = Field(100, ge=0)
    probabilities: Tuple[float, ...]
    levels: Tuple[float, ...]
    benchmarks: Tuple[BenchmarkScheme, ...]
    regress: RegressSettings = RegressSettings()
    bayesian_draws: int = Field(1000, ge=1)
    nonregression_fit_size: int = Field(200, ge=2)
    workers: int = Field(4, ge=1)
    scale: str = "full"

    model_config = {"extra": "forbid", "frozen": True}

    @field_validator("id", mode="before")
    @classmethod
    def _id(cls, v):
        return parse_experiment(v)

    @property
    def n(self) -> int:
        return self.split.n

    @property
    def table(self) -> str:
        return _PRESETS[self.id][4]

    @classmethod
    def preset(
        cls,
        id: Union[str, ExperimentId],
        scale: str = "full",
        *,
        settings: Optional[Settings] = None,
        **overrides,
    ) -> "ExperimentSpec":
        eid = parse_experiment(id)
        settings = settings or load_config(scale=scale)
        family, design, split_key, benchmarks, _ = _PRESETS[eid]
        fields = dict(
            id=eid,
            family=family,
            design=design,
            m=settings.m,
            seed=settings.seed,
            repetitions=settings.repetitions[split_key],
            split=PeriodSplit.from_tuple(settings.split[split_key]),
            burn_in=settings.burn_in,
            probabilities=tuple(settings.probabilities),
            levels=tuple(settings.levels),
            benchmarks=benchmarks,
            regress=settings.regress,
            bayesian_draws=settings.benchmarks.bayesian_draws,
            nonregression_fit_size=settings.benchmarks.nonregression_fit_size,
            workers=settings.workers,
            scale=scale,
        )
        fields.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**fields)


def list_presets() -> List[Tuple[str, str, str, str]]:
    """(id, dataset family, design, benchmarks) rows for the CLI."""
    return [
        (eid.value, fam.value, design.value, ", ".join(b.value for b in benches))
        for eid, (fam, design, _, benches, _) in _PRESETS.items()
    ]
