"""Exception types raised across the toolkit."""


class LeaperError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(LeaperError, ValueError):
    """Input data violates a documented precondition."""


class SchemaMismatchError(ValidationError):
    """Profile schema or configuration space differs from the trained one."""


class SpaceExhaustedError(ValidationError):
    """More distinct configurations requested than the space holds."""


class IllConditionedKernelError(LeaperError, ArithmeticError):
    """Kernel matrix could not be factorized even with maximal jitter."""


class FormatVersionError(LeaperError, ValueError):
    """Model file declares a format version this build cannot read."""
