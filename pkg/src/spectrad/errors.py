"""Exception types raised by the spectrad analysis pipeline."""


class SpectradError(Exception):
    """Base class for all spectrad-specific errors."""


class ArrayFormatError(SpectradError):
    """Raised for malformed NPY files (bad magic, header, or dtype)."""


class ArrayShapeError(SpectradError):
    """Raised when an array does not have the expected dimensionality/shape."""


class ArrayDataError(SpectradError):
    """Raised when array contents are invalid (NaN/Inf entries)."""


class ManifestError(SpectradError):
    """Raised for invalid manifests (duplicate names, missing files, shape mismatch)."""


class NumericError(SpectradError):
    """Raised when a numerical routine (eigensolver) fails to converge."""


class InsufficientDataError(SpectradError):
    """Raised when too few eigenvalues are available for a fit."""


class DegenerateBulkError(SpectradError):
    """Raised when iterative spike exclusion leaves no usable bulk."""


class DegenerateDataError(SpectradError):
    """Raised when a fit is impossible because the data carry no variation."""


class UndefinedMetricError(SpectradError):
    """Raised when a metric is undefined for the input (e.g. zero matrix)."""


class UnclassifiableError(SpectradError):
    """Raised when phase classification has no evidence to work with."""
