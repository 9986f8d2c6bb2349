"""Exception types shared across the package."""


class LsemapError(Exception):
    """Base class for all package errors."""


class FactorizationFailure(LsemapError):
    """Regularized Gram matrix is not numerically positive definite.

    Raised after jitter escalation is exhausted; usually signals duplicated
    points with zero noise or pathological hyperparameters.
    """


class InvalidConfig(LsemapError):
    """A configuration value is missing, malformed, or out of range."""


class Exhausted(LsemapError):
    """No unmeasured grid point remains for the selection strategy."""


class DuplicateMeasurement(LsemapError):
    """The grid index was already measured in this session."""


class OffGridIndex(LsemapError):
    """Index lies outside the grid (or position is not a lattice point)."""


class EmptyTarget(LsemapError):
    """Transfer transform requires at least one target observation."""


class DegenerateDesign(LsemapError):
    """Least-squares shift fit is unidentifiable (constant source mean)."""


class ParseError(LsemapError):
    """A data or config file failed to parse."""


class IncompleteLattice(ParseError):
    """Grid CSV does not cover the full rectangular lattice."""


class NonUniformSpacing(ParseError):
    """Grid CSV coordinates are not uniformly spaced."""


class UnknownSession(LsemapError):
    """No session with the given id exists."""


class ValueNotFinite(LsemapError):
    """A measurement value must be a finite real number."""


class ConflictingConcurrentPost(LsemapError):
    """A second concurrent mutation on one session was rejected."""
