from typing import Any, Dict, Optional


class ReductionError(Exception):
    """Base class for every failure the pipeline reports to its callers."""

    code = "reduction_error"
    exit_code = 3

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_record(self) -> Dict[str, Any]:
        return {
            "error": self.code,
            "message": self.message,
            "exit_code": self.exit_code,
            "details": self.details,
        }


class ConfigError(ReductionError):
    code = "config"
    exit_code = 1


class InputError(ReductionError):
    code = "input"
    exit_code = 2


class NetlistError(InputError):
    """Netlist problem tied to a source position (1-based line and column)."""

    code = "netlist"

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(
            f"line {line}, column {column}: {message}",
            {"line": line, "column": column},
        )
        self.line = line
        self.column = column


class NetlistSyntaxError(NetlistError):
    code = "syntax"


class DuplicateElementError(NetlistError):
    code = "duplicate_element"


class UndeclaredInductorError(NetlistError):
    code = "undeclared_inductor"


class NonPositiveValueError(NetlistError):
    code = "non_positive_value"


class ElementListError(InputError):
    code = "element_list"


class MnaAssemblyError(InputError):
    code = "mna_assembly"


class MatrixFileError(InputError):
    code = "matrix_file"


class DimensionMismatchError(InputError):
    code = "dimension_mismatch"


class SymmetryError(InputError):
    code = "nonsymmetric"


class PortMismatchError(InputError):
    code = "port_mismatch"


class InvariantError(InputError):
    code = "invariant"


class NumericalError(ReductionError):
    code = "numerical"
    exit_code = 3


class UnstableSystemError(NumericalError):
    code = "unstable"


class UnstableProjectionError(UnstableSystemError):
    code = "unstable_projection"

    def __init__(self, message: str, iteration: int):
        super().__init__(message, {"iteration": iteration})
        self.iteration = iteration


class SingularMatrixError(NumericalError):
    code = "singular"


class SingularPencilError(NumericalError):
    code = "singular_pencil"


class LyapunovSolveError(NumericalError):
    code = "lyapunov"


class CapExceededError(NumericalError):
    code = "dense_cap"


class RankError(NumericalError):
    code = "rank"


class ConvergenceError(NumericalError):
    code = "not_converged"
