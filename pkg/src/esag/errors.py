"""Exception hierarchy shared by the library and the CLI."""


class EsagError(Exception):
    """Base class for all errors raised by :mod:`esag`."""


class InvalidParameterError(EsagError, ValueError):
    """Parameters outside their admissible set (e.g. a zero mean vector)."""


class ShapeError(EsagError, ValueError):
    """Array lengths or shapes that do not correspond to any valid dimension."""


class DataError(EsagError, ValueError):
    """Observations that are not valid directional data."""


class InsufficientDataError(DataError):
    """Fewer observations than free parameters."""


class OptimizationError(EsagError, RuntimeError):
    """The likelihood could not be optimised from any start."""
