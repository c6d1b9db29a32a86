"""Exception hierarchy shared by all hybridsim modules."""


class HybridSimError(Exception):
    """Base class for every error raised by hybridsim."""


class InvalidParameterError(HybridSimError, ValueError):
    pass


class InvalidGridError(HybridSimError, ValueError):
    pass


class WindowExceededError(HybridSimError, ValueError):
    """Requested times fall outside the window resolvable by a frequency grid."""


class CoverageError(HybridSimError, ValueError):
    """A discretization span does not cover the spin density."""


class StepSizeError(HybridSimError, ValueError):
    pass


class NumericalInstabilityError(HybridSimError, ArithmeticError):
    pass


class UnknownGroupError(HybridSimError, KeyError):
    pass


class TuningRangeError(HybridSimError, ValueError):
    pass


class SingularFluxError(TuningRangeError):
    pass


class CalibrationError(HybridSimError, ValueError):
    pass


class FitError(HybridSimError, RuntimeError):
    """Least-squares fit failed; carries the final residual norm."""

    def __init__(self, message, residual_norm=float("nan")):
        super().__init__(f"{message} (final residual norm {residual_norm:.3e})")
        self.residual_norm = residual_norm


class ConfigError(HybridSimError, ValueError):
    """Invalid experiment configuration. ``field`` names the offending key."""

    def __init__(self, message, field=None, line=None, column=None):
        where = ""
        if line is not None:
            where = f" (line {line}, column {column})"
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message + where)
        self.field = field
        self.line = line
        self.column = column


class SchemaError(HybridSimError, ValueError):
    pass
