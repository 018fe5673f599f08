"""Exception types raised by the numerical operators.

Every failure mode that a caller can act on gets its own class; messages
carry the concrete numbers (point, tolerance, stage) that triggered it.
"""


class HenonSiegelError(Exception):
    """Base class for all package errors."""


class DomainError(HenonSiegelError):
    """A point lies outside the validity domain of a series."""


class CompositionDomainError(DomainError):
    """The inner map of a composition leaves the outer map's domain.

    Signals that a renormalization word left its validity region.
    """


class SeriesTailError(HenonSiegelError):
    """Truncated series has a tail estimate above the configured tolerance."""


class NonInvertibleError(HenonSiegelError):
    """Local inversion requested over a region containing a critical point."""


class DegenerateRescaleError(HenonSiegelError):
    """Rescaling constant is zero (or numerically indistinguishable from it)."""


class ProjectionFailureError(HenonSiegelError):
    """Newton iteration of the almost-commuting projection diverged."""


class OrbitEscapeError(HenonSiegelError):
    """A word application escaped its domain; records the offending letter."""

    def __init__(self, message, letter_index=None, letter=None):
        super().__init__(message)
        self.letter_index = letter_index
        self.letter = letter


class CriticalPointAmbiguityError(HenonSiegelError):
    """Argument-principle count of critical points on the search disk is not 1."""


class NonDissipativeError(HenonSiegelError):
    """|nu| >= 1 requested for a construction that needs dissipation."""


class SmallDivisorError(HenonSiegelError):
    """A linearization divisor fell below tolerance; records the index."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class InsufficientDataError(HenonSiegelError):
    """Not enough samples in a region to estimate the requested quantity."""


class StageFailureError(HenonSiegelError):
    """A named stage of the 2D renormalization failed its precondition."""

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage
