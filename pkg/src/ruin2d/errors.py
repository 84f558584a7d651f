"""Semantic exceptions shared across the package."""


class RuinModelError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(RuinModelError, ValueError):
    """Inputs violate an operation's contract (domain, shape, regime)."""


class NumericalError(RuinModelError, RuntimeError):
    """A numerical routine failed to reach its accuracy target."""
