"""Exception types shared across the package."""


class GameFormatError(ValueError):
    """Malformed or inconsistent game description."""


class QueryFormatError(ValueError):
    """Malformed query text or unresolvable state references."""


class StrategyFormatError(ValueError):
    """Malformed strategy description."""


class DqbfFormatError(ValueError):
    """Malformed quantified-formula description."""


class ResourceCapError(RuntimeError):
    """A configured size cap was exceeded before the computation finished."""


class InternalInvariantError(AssertionError):
    """An internal consistency check failed; indicates a bug, not bad input."""
