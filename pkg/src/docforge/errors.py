"""Shared exception types."""


class DocforgeError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(DocforgeError):
    """Vector dimensionality differs from what the batch or index expects."""
