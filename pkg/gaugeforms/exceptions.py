"""Error hierarchy for gaugeforms."""


class GaugeFormsError(Exception):
    """Base class for every error raised by the library."""


# --------------------------
# Contract errors
# --------------------------
class InputError(GaugeFormsError):
    """Arguments violate an operation's preconditions."""


class BadDimension(InputError):
    pass


class BadResolution(InputError):
    pass


class BadAxis(InputError):
    pass


class SampleCountMismatch(InputError):
    pass


class GridMismatch(InputError):
    pass


class ArityMismatch(InputError):
    pass


class ConfigError(InputError):
    """A config document could not be read or failed schema validation."""

    def __init__(self, message, position=None):
        super().__init__(message)
        self.position = position


# --------------------------
# Expression errors
# --------------------------
class ParseError(InputError):
    """Malformed expression text; position is a 0-based character offset."""

    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnknownIdentifier(InputError):
    def __init__(self, name, position=None):
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"unknown identifier '{name}'{where}")
        self.name = name
        self.position = position


class DivisionByZero(GaugeFormsError):
    def __init__(self, point):
        super().__init__(f"division by zero at point {tuple(float(c) for c in point)}")
        self.point = point


# --------------------------
# Invalid symbols
# --------------------------
class InvalidSymbol(GaugeFormsError):
    """The symbol fails one of the invariants the geometry relies on."""


class SignatureViolation(InvalidSymbol):
    pass


class DegenerateMetric(InvalidSymbol):
    pass


class ResidualTooLarge(InvalidSymbol):
    pass


class NonConstantCharge(InvalidSymbol):
    pass


class NotTimelike(InvalidSymbol):
    pass


class DegenerateFrame(InvalidSymbol):
    pass


# --------------------------
# Frames, lifts and gauges
# --------------------------
class NotInGroup(GaugeFormsError):
    pass


class LiftError(GaugeFormsError):
    """Base class for failures of the spin lift."""


class LiftVerificationFailed(LiftError):
    pass


class SamplingTooCoarse(LiftError):
    pass


class ClosureFailure(LiftError):
    pass


class NoLift(LiftError):
    def __init__(self, message, signs=None):
        super().__init__(message)
        self.signs = signs


class SingularGauge(GaugeFormsError):
    pass


class VanishingVolumeForm(GaugeFormsError):
    pass


class NotClosed(GaugeFormsError):
    pass


class NoSingleValuedPhase(GaugeFormsError):
    def __init__(self, message, periods=None):
        super().__init__(message)
        self.periods = periods
