"""Exception types raised across the package."""


class InvalidInputError(ValueError):
    """A point, parameter or descriptor is outside its admissible domain."""


class NoMinimumError(ValueError):
    """An oracle search found no point with a finite objective value."""


class InconsistencyError(RuntimeError):
    """Two independent computations that must agree did not."""


class InvalidReferenceError(ValueError):
    """A supplied reference pair is not a fixed point of the splitting map."""
