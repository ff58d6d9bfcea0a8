from .error_models import ERROR_MODEL_REGISTRY, ErrorModel, build_error_model, register
from .pipeline import (
    EnsembleInputs,
    EnsembleScheme,
    ErrorModelKind,
    SchemeResult,
    TrainedErrorModels,
    VariantMode,
    average_quantiles,
    iter_auxiliary_quantiles,
    predict_auxiliary_quantiles,
    prepare_inputs,
    run_scheme,
    train_error_models,
)
from .sisters import ErrorMatrix, SisterMatrix, compute_errors, make_sister_predictions
from .surface import DEFAULT_PROBABILITIES, QuantileSurface, read_surface_csv

__all__ = [
    "ERROR_MODEL_REGISTRY", "ErrorModel", "build_error_model", "register",
    "EnsembleInputs", "EnsembleScheme", "ErrorModelKind", "SchemeResult", "TrainedErrorModels",
    "VariantMode", "average_quantiles", "iter_auxiliary_quantiles", "predict_auxiliary_quantiles",
    "prepare_inputs", "run_scheme", "train_error_models",
    "ErrorMatrix", "SisterMatrix", "compute_errors", "make_sister_predictions",
    "DEFAULT_PROBABILITIES", "QuantileSurface", "read_surface_csv",
]
