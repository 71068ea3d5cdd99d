"""Exception and warning types raised across the package."""

from __future__ import annotations

from dataclasses import dataclass


class LambdaMemError(Exception):
    """Base class for all package errors."""


@dataclass(frozen=True)
class ConfigIssue:
    code: str
    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.code} [{self.field}]: {self.message}"


class ConfigError(LambdaMemError, ValueError):
    """One or more configuration values are invalid.

    ``issues`` holds every problem found, not just the first, so a caller can
    report the whole list at once.
    """

    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues))

    @property
    def codes(self) -> list[str]:
        return [i.code for i in self.issues]


class InvalidDensityMatrix(LambdaMemError, ValueError):
    pass


class DeltaDistributionQuery(LambdaMemError, ValueError):
    """Pointwise density requested for the zero-width (T2* = inf) distribution."""


class QuadratureNotConverged(LambdaMemError, ArithmeticError):
    pass


class NonDiagonalInitialState(LambdaMemError, ValueError):
    pass


class SingularKernel(LambdaMemError, ArithmeticError):
    pass


class WindowTooSmall(LambdaMemError, ValueError):
    pass


class NonPositiveArea(LambdaMemError, ValueError):
    pass


class InfinitePhaseLag(LambdaMemError, ValueError):
    pass


class AsymptoticRegimeViolated(LambdaMemError, ValueError):
    pass


class StateBlowup(LambdaMemError, ArithmeticError):
    pass


class NoImprintFound(LambdaMemError, LookupError):
    pass


class DivisionByZeroCoherence(LambdaMemError, ZeroDivisionError):
    pass


class PeakLost(LambdaMemError, LookupError):
    pass


class StorageOutsideMedium(UserWarning):
    pass


class GridUnderresolved(UserWarning):
    pass
