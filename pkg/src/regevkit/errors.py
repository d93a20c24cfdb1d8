"""Exception types shared across the package."""


class RegevError(Exception):
    """Base class for all package errors."""


class InputError(RegevError, ValueError):
    """An argument violates an operation's precondition."""


class ResourceError(RegevError):
    """A desk-scale budget (enumeration size, modulus size, ...) was exceeded."""
