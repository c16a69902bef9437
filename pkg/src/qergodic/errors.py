"""Exception types raised across the package."""


class QergodicError(ValueError):
    pass


class InvalidDimensionError(QergodicError):
    pass


class ShapeError(QergodicError):
    pass


class DegeneracyError(QergodicError):
    pass


class LabelError(QergodicError, KeyError):
    pass


class OrthogonalConditioningError(QergodicError):
    """A weak value was requested with (numerically) orthogonal pre- and post-states."""


class OrthogonalReferenceError(OrthogonalConditioningError):
    """The state has no overlap with the equal-amplitude reference state."""


class EmptyEnsembleError(QergodicError):
    pass


class ZeroProbabilityError(QergodicError):
    pass


class AliasingError(QergodicError):
    pass


class InvalidBinningError(QergodicError):
    pass


class DegenerateInputError(QergodicError):
    pass


class ConfigError(QergodicError):
    """Invalid scenario configuration. ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")
