"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input lies outside the set where an operation is defined."""


class MapOverflowError(OverflowError):
    """A map evaluation would exceed double-precision range.

    ``point`` holds the first offending input when it is known.
    """

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class IndeterminateError(RuntimeError):
    """A numerical test cannot decide (e.g. the seed voxel is blocked)."""


class OrientationError(ArithmeticError):
    """A finite-difference Jacobian with non-positive determinant was found."""

    def __init__(self, message, location=None, det=None):
        super().__init__(message)
        self.location = location
        self.det = det


class EmptyEstimateError(ValueError):
    """A direction estimate has no samples."""
