"""Exception hierarchy shared by all modules."""


class SbpSatError(Exception):
    """Base class for every error raised by the package."""


class UnsupportedOrder(SbpSatError):
    pass


class MissingCoefficients(UnsupportedOrder):
    """Order is valid but no coefficient file could be found for it."""


class GridTooSmall(SbpSatError):
    pass


class CoefficientValidationFailed(SbpSatError):
    def __init__(self, invariant: str, residual: float):
        super().__init__(f"{invariant} violated (residual {residual:.3e})")
        self.invariant = invariant
        self.residual = residual


class LengthMismatch(SbpSatError):
    pass


class SizeMismatch(SbpSatError):
    pass


class ParseError(SbpSatError):
    pass


class CompatibilityViolation(SbpSatError):
    pass


class ConstraintSystemInfeasible(SbpSatError):
    pass


class SymmetryViolation(SbpSatError):
    pass


class EndpointMismatch(SbpSatError):
    pass


class ParameterOutOfRange(SbpSatError):
    pass


class PenaltyBelowBound(SbpSatError):
    pass


class CoverageGap(SbpSatError):
    pass


class NonpositiveInput(SbpSatError):
    pass


class SystemTooLarge(SbpSatError):
    pass


class InsufficientLevels(SbpSatError):
    pass


class BlowupDetected(SbpSatError):
    def __init__(self, t: float, amplitude: float):
        super().__init__(f"solution amplitude {amplitude:.3e} exceeded guard at t={t:.6g}")
        self.t = t
        self.amplitude = amplitude


class ConfigError(SbpSatError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
