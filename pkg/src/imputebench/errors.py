"""Exception hierarchy shared by every module."""


class ImputeBenchError(Exception):
    """Base class for all library errors."""


class ParseError(ImputeBenchError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ShapeError(ImputeBenchError, ValueError):
    pass


class IoError(ImputeBenchError, OSError):
    pass


class DegenerateSeriesError(ImputeBenchError, ValueError):
    pass


class StateError(ImputeBenchError, ValueError):
    pass


class SpecError(ImputeBenchError, ValueError):
    pass


class CapacityError(SpecError):
    pass


class UnknownAlgorithmError(ImputeBenchError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ParamError(ImputeBenchError, ValueError):
    pass


class NothingToImputeError(ImputeBenchError, ValueError):
    pass


class RegistryError(ImputeBenchError, ValueError):
    pass


class ContractError(ImputeBenchError, RuntimeError):
    pass


class EmptyMaskError(ImputeBenchError, ValueError):
    pass


class DegenerateMetricError(ImputeBenchError, ValueError):
    pass


class ComplexityError(ImputeBenchError, ValueError):
    pass


class DataError(ImputeBenchError, ValueError):
    pass
