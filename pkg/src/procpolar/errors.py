"""Shared exception types."""


class ProcpolarError(Exception):
    """Base class for all library errors."""


class PreconditionError(ProcpolarError, ValueError):
    """An operation was called with inputs that violate its contract."""


class PostconditionError(ProcpolarError, RuntimeError):
    """An internal exactness check failed; this signals a defect, not bad input."""


class RationalFormatError(ProcpolarError, ValueError):
    """A number was not an exact rational literal."""
