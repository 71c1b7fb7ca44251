"""Exception hierarchy shared across the package."""


class FidschedError(Exception):
    """Base class for all package errors."""


# circuit IR
class CircuitError(FidschedError):
    pass


class QasmSyntaxError(CircuitError):
    """Malformed QASM source. Carries a 1-based line and column."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        where = f" (line {line}, col {col})" if line is not None else ""
        super().__init__(f"{message}{where}")


class UnsupportedGate(CircuitError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unsupported gate {name!r}")


class RegisterError(CircuitError):
    pass


class MissingWeight(CircuitError):
    def __init__(self, index: int, op):
        self.index = index
        self.op = op
        super().__init__(f"no weight for op #{index} ({op})")


# backend model
class CalibrationError(FidschedError):
    pass


class SchemaError(CalibrationError):
    pass


class ConsistencyError(CalibrationError):
    pass


# transpiler / estimator
class CapacityError(FidschedError):
    pass


class MissingCalibration(FidschedError):
    pass


class DegenerateExpected(FidschedError):
    pass


class RangeError(FidschedError):
    pass


# environment / workload
class EmptyCorpus(FidschedError):
    pass


class InvalidAction(FidschedError):
    pass


# learning
class ShapeMismatch(FidschedError):
    pass


class NonFiniteGradient(FidschedError):
    pass


class CheckpointError(FidschedError):
    pass


class VersionMismatch(CheckpointError):
    pass


class CorruptFile(CheckpointError):
    pass


class ConfigError(FidschedError):
    pass
