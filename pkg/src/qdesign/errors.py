"""Exception types shared across the package."""


class QDesignError(Exception):
    """Base class for all package errors."""


class FieldError(QDesignError):
    pass


class BudgetExceeded(QDesignError):
    """An enumeration or search would exceed its configured budget."""


class DimensionError(QDesignError):
    pass


class NotInLattice(QDesignError):
    pass


class VerificationError(QDesignError):
    """A produced object failed its own exact self-check."""


class SearchExhausted(QDesignError):
    pass


class FormatError(QDesignError):
    pass
