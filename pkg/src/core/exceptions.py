class HorocountError(Exception):
    exit_code = 1


class ConfigError(HorocountError):
    exit_code = 2


class ParseError(ConfigError):
    pass


class ConfigMismatch(ConfigError):
    pass


class UnsupportedRing(ConfigError):
    pass


class UnsupportedDimension(ConfigError):
    pass


class InvalidInterval(ConfigError):
    pass


class DimensionMismatch(ConfigError):
    pass


class InvariantViolation(HorocountError):
    exit_code = 3


class DegenerateDecomposition(InvariantViolation):
    pass


class DecompositionFailure(InvariantViolation):
    pass


class NotPrimitive(InvariantViolation):
    pass


class HeightUndefined(InvariantViolation):
    pass


class AnalysisError(HorocountError):
    exit_code = 3


class EmptySample(AnalysisError):
    pass


class DegenerateFit(AnalysisError):
    pass


class QuadratureFailure(AnalysisError):
    pass


class OutputError(HorocountError):
    exit_code = 4
