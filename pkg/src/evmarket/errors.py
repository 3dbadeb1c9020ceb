"""Exception hierarchy shared by every module.

Each class carries a short machine-readable ``code`` that the command line
front end prints on failure.
"""


class ModelError(Exception):
    code = "MODEL_ERROR"


class NumericRangeError(ModelError, ArithmeticError):
    code = "NUMERIC_RANGE"


class SolverError(ModelError, RuntimeError):
    code = "SOLVER_FAILED"

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


class DegeneracyError(ModelError, ArithmeticError):
    code = "DEGENERATE"


class DomainError(ModelError, ValueError):
    code = "DOMAIN"


class EnumerationLimitError(ModelError, ValueError):
    code = "ENUMERATION_LIMIT"


class ValidationError(ModelError, ValueError):
    code = "VALIDATION"


class ScenarioError(ModelError, ValueError):
    code = "SCENARIO"
