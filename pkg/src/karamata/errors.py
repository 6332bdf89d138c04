"""Exception hierarchy shared by every module of the package."""


class KaramataError(Exception):
    """Base class for all errors raised by karamata."""


class DivergentValue(KaramataError):
    """An integral or supremum node is infinite at the requested argument."""


class DivergentConstruction(DivergentValue):
    """A tilde/hat construction is infinite, so it is not a slowly varying function."""


class NoConvergence(KaramataError):
    """Adaptive quadrature ran out of subdivisions before meeting its tolerance."""

    def __init__(self, message, value=None, err_est=None):
        super().__init__(message)
        self.value = value
        self.err_est = err_est


class PreconditionFailed(KaramataError):
    """An operation was called on an expression that violates its hypothesis."""


class UndeterminedLimitingCase(KaramataError):
    """Requested exponent is a limiting case where slow variation decides nothing."""


class CoefficientOverflow(KaramataError):
    """Kernel derivative polynomial coefficients left the floating point range."""


class GlueMismatch(KaramataError):
    """One-sided values or derivatives disagree at the glue point t = 1."""


class SchemaMismatch(KaramataError):
    """A report file is malformed or carries an unsupported schema version."""


class ReportIOError(KaramataError, OSError):
    """Reading or writing a report or sample file failed."""


class ParseError(KaramataError):
    """The expression DSL could not be parsed."""

    def __init__(self, message, line, column, expected=()):
        self.line = line
        self.column = column
        self.expected = tuple(sorted(set(expected)))
        detail = f"{message} at line {line}, column {column}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(detail)
