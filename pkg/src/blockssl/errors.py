"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, everything else
derived from BlocksslError -> 3.
"""


class BlocksslError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(BlocksslError):
    """Invalid or unsatisfiable configuration / flag combination."""


class ShapeError(BlocksslError):
    """Tensor dimensions do not admit the requested operation."""


class NumericError(BlocksslError):
    """Numerically degenerate input or non-finite intermediate."""


class DataError(BlocksslError):
    """Dataset, manifest, or image file is missing or malformed."""
