"""Exception types raised across the package."""


class DomainError(ValueError):
    """An input lies outside the domain of the requested operation."""


class NormalizationError(DomainError):
    """A distribution or set of amplitudes cannot be normalized."""


class DegenerateConditioningError(DomainError):
    """Heralding on zero has vanishing success probability (R = 1 with p_0 = 0)."""


class TruncationError(DomainError):
    """The adaptive photon-number cutoff would exceed the configured cap."""


class ConsistencyError(RuntimeError):
    """An internal analytic identity failed; indicates a bug, not bad input."""
