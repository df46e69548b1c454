"""Exception and warning classes raised by specdelay."""

from __future__ import annotations


class SpecDelayError(Exception):
    """Base class for every error raised by the library."""

    exit_code = 1


class DomainError(SpecDelayError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class DelayOutOfRange(DomainError):
    """The delay is not in [pi/2, pi)."""

    exit_code = 4


class ConfigError(SpecDelayError, ValueError):
    """A run configuration failed validation."""


class NonConvergence(SpecDelayError):
    """Root search exhausted Newton and the contour fallback.

    ``n`` is the eigenvalue index when the failure happened inside a
    spectrum computation, otherwise None.
    """

    exit_code = 5

    def __init__(self, message: str, n: int | None = None) -> None:
        super().__init__(message)
        self.n = n

    def with_index(self, n: int) -> "NonConvergence":
        return NonConvergence(f"eigenvalue n={n}: {self}", n=n)


class StepControlFailure(SpecDelayError):
    """Step halving in the IVP integrator did not reach its tolerance."""

    exit_code = 6


class InsufficientIndices(SpecDelayError):
    """Too few indices pass the cosine threshold of the ratio estimator."""


class IllConditionedFit(SpecDelayError):
    """The asymptotics fit window carries no usable cosine weights."""


class MalformedInput(SpecDelayError):
    """An input file could not be parsed."""

    exit_code = 2

    def __init__(self, message: str, path: str | None = None, line: int | None = None) -> None:
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{where}{message}")
        self.path = path
        self.line = line


class DelayMismatch(SpecDelayError):
    """Two spectrum files disagree on the delay."""

    exit_code = 3


class SpecDelayWarning(UserWarning):
    """Base class for numerical warnings."""


class PoleCollision(SpecDelayWarning):
    """A product was evaluated on an unperturbed eigenvalue past its horizon."""


class DegenerateTheta(SpecDelayWarning):
    """theta_j vanished at every sample point."""


class ConsistencyWarning(SpecDelayWarning):
    """Two quantities that should agree differ by more than expected."""
