"""Exception types shared across the pipeline.

The CLI maps these onto exit codes: usage problems exit 1, DataError
exits 2, NumericError exits 3.
"""


class GimcError(Exception):
    """Base class for all pipeline errors."""


class DataError(GimcError):
    """Malformed or inconsistent input data (corpus files, dictionaries, caches)."""


class NumericError(GimcError):
    """Non-finite values, shape mismatches, or ill-defined numeric operations."""
