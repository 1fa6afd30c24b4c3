"""
Exception hierarchy for the rarefaction laboratory.

Every error the library raises derives from LabError so the CLI can map it to
one of its exit codes.
"""

from __future__ import annotations

from typing import Any

# CLI exit codes
EXIT_OK = 0
EXIT_PROPERTY_FAILURE = 1
EXIT_USAGE = 2
EXIT_DIVERGENCE = 3


class LabError(Exception):
    """Base class for all laboratory errors."""

    exit_code: int = EXIT_USAGE


class DomainError(LabError, ValueError):
    """A state or argument lies outside the admissible domain (ρ ≤ 0, θ ≤ 0, t ≤ 0, ...)."""


class ConditioningError(LabError):
    """A state is too close to vacuum for the eigendecomposition to be trusted."""


class NotARarefactionError(DomainError):
    """The end states cannot be connected by an expanding 3-rarefaction wave."""


class ResolutionError(LabError):
    """A grid or time sampling does not resolve the features it is asked to measure."""


class ConfigurationError(LabError):
    """Invalid configuration; the message names the offending field path."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class ContractError(LabError):
    """A caller broke an input contract (missing derivatives, mismatched grids, ...)."""


class FitError(LabError):
    """A rate fit cannot be computed from the supplied samples."""


class ProfileBoundError(LabError):
    """The composite profile left its admissible bounds (ε too large)."""


class OutputError(LabError):
    """A result file could not be written; the message names the path."""


class DivergenceError(LabError):
    """A time integration produced an inadmissible or non-finite state."""

    exit_code = EXIT_DIVERGENCE

    def __init__(self, message: str, t: float, diagnostics: dict[str, Any] | None = None):
        self.t = t
        self.diagnostics = diagnostics or {}
        super().__init__(f"{message} (t={t:.6g})")


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the CLI exit code; anything outside the hierarchy counts as a runtime failure."""
    if isinstance(error, LabError):
        return error.exit_code
    return EXIT_DIVERGENCE
