"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A scenario or function argument is outside its valid domain."""


class SingularGeometryError(ValueError):
    """A user sits exactly on a tower, so a distance-based quantity diverges."""


class UndefinedMetricError(ValueError):
    """A metric was requested on a network where it has no meaning (e.g. no users)."""


class NoBenefitError(ValueError):
    """A sharing gain is already below one at p = 0, so no threshold exists."""


class OutOfRegimeWarning(UserWarning):
    """An approximation is evaluated where its large-degree assumption fails."""


class InvalidSpecError(InvalidParameterError):
    """A sweep or figure specification names an unknown parameter or figure."""
