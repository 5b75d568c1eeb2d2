"""Exception types shared across the toolkit.

Every public operation raises one of these instead of a bare ValueError so
the CLI can report the error name and exit with code 2.
"""


class ConfkitError(Exception):
    """Base class for all toolkit errors."""

    @property
    def name(self) -> str:
        return type(self).__name__


class InvalidInput(ConfkitError):
    """Non-finite or out-of-contract numeric input."""


class DegenerateFrame(ConfkitError):
    """Linearly dependent vectors where an independent frame is required."""


class DomainViolation(ConfkitError):
    """A map was evaluated outside its domain predicate."""


class NotFound(ConfkitError):
    """Unknown registry entry."""


class DimensionError(ConfkitError):
    """Source/target dimensions do not match."""


class EmptySample(ConfkitError):
    """No in-domain sample points were available."""


class SingularPoint(ConfkitError):
    """Jacobian rank fell below the target dimension."""


class Unsupported(ConfkitError):
    """Operation not available for these dimensions."""


class BadStart(ConfkitError):
    """Lift start point does not cover the base path start."""


class StepCollapse(ConfkitError):
    """Adaptive step shrank below the useful minimum."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class LiftIncomplete(ConfkitError):
    """A lift needed to finish (e.g. for holonomy) did not complete."""

    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status


class InvalidFamily(ConfkitError):
    """Empty or malformed curve family."""


class InvalidComplex(ConfkitError):
    """Cell complex with non-finite or non-positive areas."""


class InvalidSurface(ConfkitError):
    """Surface mesh unusable for the requested operation (e.g. disconnected)."""


class OutOfExtent(ConfkitError):
    """Requested radius/cutoff exceeds the meshed extent."""


class UsageError(ConfkitError):
    """Command line usage problem (exit code 1, not 2)."""
