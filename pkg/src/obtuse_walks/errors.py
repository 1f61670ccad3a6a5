"""Exception types shared across the package."""


class ObtuseWalksError(Exception):
    """Base class for all package-specific errors."""


class MalformedInputError(ObtuseWalksError):
    """Input is structurally broken: wrong shapes, missing keys, unparseable files.

    Distinct from a negative validation verdict, which is reported, not raised.
    """


class DomainError(ObtuseWalksError, ValueError):
    """Input is well-formed but outside the mathematical domain of the operation."""


class GuardError(ObtuseWalksError):
    """A resource guard (chain dimension, word-enumeration budget) was exceeded."""
