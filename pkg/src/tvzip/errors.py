"""Exception hierarchy for the tvzip package."""


class TVZIPError(Exception):
    """Base class for all package errors."""


class ConstraintError(TVZIPError, ValueError):
    """Parameters violate the model's feasibility constraints."""


class NonStationaryError(ConstraintError):
    """Autoregressive coefficient outside the stationary region."""


class EmptyInputError(TVZIPError, ValueError):
    pass


class AlignmentError(TVZIPError, ValueError):
    """Arrays that must share a time index have different lengths."""


class MissingCovariateError(TVZIPError, ValueError):
    """A link that needs an exogenous series was evaluated without one."""


class MembershipError(TVZIPError, ValueError):
    """Zero-membership weights inconsistent with the observed counts."""


class NumericalError(TVZIPError, ArithmeticError):
    pass


class OptimizationError(TVZIPError, RuntimeError):
    pass


class IncomparableFitsError(TVZIPError, ValueError):
    """Fits passed to model comparison were made on different data."""


class DataFileError(TVZIPError, ValueError):
    """Base class for CSV ingestion problems."""


class ParseError(DataFileError):
    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class OrderingError(DataFileError):
    pass
