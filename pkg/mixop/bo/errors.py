"""Exception hierarchy shared by the solver modules and the CLI.

Every error carries a stable ``code`` string; the CLI maps error classes to
process exit codes.
"""
from __future__ import annotations

from typing import Any, Optional


class MixopError(Exception):
    """Base class for all domain errors."""

    code: str = "error"

    def __init__(self, message: str, *, code: Optional[str] = None) -> None:
        super().__init__(message)
        if code is not None:
            self.code = code


class ConfigError(MixopError):
    """A problem file could not be read or failed validation."""

    code = "config_error"


class ConvergenceError(MixopError):
    """An iterative solver stopped without meeting its tolerance.

    ``report`` holds the best-so-far result so callers can still write it out.
    """

    code = "not_converged"

    def __init__(self, message: str, *, code: str, report: Any = None) -> None:
        super().__init__(message, code=code)
        self.report = report


class F5ContradictionError(MixopError):
    """A negative λ₁(L − a₀) was found for a nonlinearity that is not positive near 0."""

    code = "f5_contradiction"


class InconsistencyError(MixopError):
    """The existence predicate disagrees with the observed solve."""

    code = "inconsistent"
