"""Exception hierarchy shared across the package."""


class CensCopulaError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(CensCopulaError, ValueError):
    """A copula parameter or Kendall's tau lies outside the family's domain."""


class DataError(CensCopulaError, ValueError):
    """Input data is malformed, empty, or degenerate."""


class EmptyNeighborhoodError(DataError):
    """No (or too few) observations carry positive kernel weight."""


class FitError(CensCopulaError, RuntimeError):
    """A numerical fit could not produce a usable result."""
