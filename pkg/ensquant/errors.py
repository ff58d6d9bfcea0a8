"""
ensquant.errors
---------------
Exception hierarchy shared by the kernels, the ensemble pipeline and the CLI.
"""

from __future__ import annotations

from typing import Optional


class EnsquantError(Exception):
    """Base class for every error raised on purpose by ensquant."""


class ConfigurationError(EnsquantError, ValueError):
    """Unknown experiment/family, malformed probability grid, bad config file."""


class DomainError(EnsquantError, ValueError):
    """An argument lies outside the domain of the operation (e.g. alpha not in (0, 1))."""


class ShapeError(EnsquantError, ValueError):
    """Array lengths or grids do not line up."""


class InsufficientDataError(EnsquantError, ValueError):
    """Too few observations for the requested fit."""


class SingularityError(EnsquantError, ArithmeticError):
    """Rank-deficient design matrix."""

    def __init__(self, message: str, sister_index: Optional[int] = None):
        if sister_index is not None:
            message = f"{message} (sister {sister_index})"
        super().__init__(message)
        self.sister_index = sister_index


class ConvergenceError(EnsquantError, RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message: str, gap: float):
        super().__init__(f"{message} (achieved duality gap {gap:.3e})")
        self.gap = gap


class StageError(EnsquantError):
    """Failure inside one stage of the ensemble pipeline."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


class ReportIOError(EnsquantError, OSError):
    """A report file could not be written."""

    def __init__(self, path, cause: BaseException):
        super().__init__(f"cannot write {path}: {cause}")
        self.path = path
