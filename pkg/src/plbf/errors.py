"""Exception types shared across the package."""


class PlbfError(Exception):
    """Base class for every error this package raises on purpose."""


class ValidationError(PlbfError, ValueError):
    """Invalid parameters, records, or file contents."""


class InfeasibleError(PlbfError):
    """The requested constraints admit no plan."""
