"""Exception taxonomy shared by all segiqr modules.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericError -> 4.
"""


class SegIqrError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SegIqrError):
    """Invalid architecture config, parameters, or mode selection."""


class DataError(SegIqrError):
    """Problem with an on-disk artifact or dataset."""


class FormatError(DataError):
    """Bad magic bytes, unsupported version, or malformed structure."""


class TruncatedError(FormatError):
    """File ended before the declared payload was complete."""


class ChecksumError(DataError):
    """An artifact does not match the checksum recorded for it."""


class WeightShapeError(DataError):
    """Stored weight tensors do not match the architecture config."""


class NumericError(SegIqrError):
    """Non-finite values where finite ones are required."""
