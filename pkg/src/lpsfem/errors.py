"""Exception hierarchy shared by all modules."""


class LpsError(Exception):
    """Base class for errors raised by lpsfem."""


class InvalidArgumentError(LpsError, ValueError):
    pass


class UnsupportedDegreeError(LpsError, ValueError):
    pass


class UnsupportedElementError(LpsError, ValueError):
    pass


class DegenerateCellError(LpsError, ArithmeticError):
    pass


class ConfigurationError(LpsError, ValueError):
    pass


class IllConditionedBasisError(LpsError, ArithmeticError):
    pass


class FactorizationFailure(LpsError, RuntimeError):
    """Sparse factorization could not be completed.

    ``diagnostics`` carries whatever pivot information was available.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ResidualFailure(LpsError, RuntimeError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class WellposednessWarning(UserWarning):
    """Coefficient data violate the positivity condition needed for coercivity."""
