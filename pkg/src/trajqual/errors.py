"""Exception hierarchy shared by all modules."""


class TrajqualError(Exception):
    """Base class for every error raised by this package."""


class DataError(TrajqualError):
    """Input data is malformed or violates a domain invariant."""


class CoordinateError(DataError, ValueError):
    """Latitude or longitude outside its valid range."""


class EmptyTrajectoryError(DataError):
    """A trajectory without any points."""


class ParseError(DataError):
    """A source file could not be parsed.

    ``line`` is the 1-based line number of the offending row, when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GeodesicConvergenceError(TrajqualError, ArithmeticError):
    """The inverse geodesic iteration did not converge (nearly antipodal points)."""


class EmptyIndexError(DataError):
    """Nearest-neighbor query against an empty POI collection."""
