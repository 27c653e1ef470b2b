"""Exception types shared across the package."""


class FormatError(ValueError):
    """Malformed input file (ragged rows, unparseable tokens, NaN entries)."""


class EmptyDatasetError(ValueError):
    """An operation received a dataset with no rows."""


class DimensionError(ValueError):
    """Array shapes do not line up with the declared dimensions."""


class NumericError(ArithmeticError):
    """A non-finite value appeared where finite arithmetic was required."""
