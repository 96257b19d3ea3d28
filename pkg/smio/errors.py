from __future__ import annotations


class SMIOError(Exception):
    """Base class for every error raised by smio"""


class InvalidInputError(SMIOError, ValueError):
    """Raised for non-finite or ill-formed numeric input"""


class DimensionError(SMIOError, ValueError):
    """Raised when array shapes do not agree"""


class LPError(SMIOError):
    """Base class for linear-program failures"""


class InfeasibleProgramError(LPError):
    """Raised when a linear program has no feasible point.

    ``constraints`` holds the indices of an infeasible subsystem of the
    inequalities that were passed in.
    """

    def __init__(self, msg, constraints=()):
        super().__init__(msg)
        self.constraints = tuple(constraints)


class UnboundedProgramError(LPError):
    """Raised when a linear program's objective is unbounded below"""


class AbstractionError(SMIOError):
    """Raised when an affine abstraction cannot be computed"""


class InvalidPairError(AbstractionError):
    """Raised when a lower function exceeds its upper partner at a sample"""


class DomainError(AbstractionError):
    """Raised when a box leaves the domain it must be abstracted in"""


class SoundnessFault(SMIOError):
    """Raised when a framer becomes empty; the noise bounds or Lipschitz constants are invalid"""

    def __init__(self, msg, lo=None, hi=None, k=None):
        super().__init__(msg)
        self.lo = lo
        self.hi = hi
        self.k = k


class ExpressionError(SMIOError):
    """Raised for syntax errors and unknown identifiers in an expression"""

    def __init__(self, msg, line=1, column=1):
        super().__init__(f"{msg} (line {line}, column {column})")
        self.line = line
        self.column = column


class EvaluationError(ExpressionError):
    """Raised when an expression cannot be evaluated (e.g., division by zero)"""


class UnknownSystemError(SMIOError, KeyError):
    """Raised when a built-in system name is not registered"""

    def __init__(self, name, available=()):
        super().__init__(name)
        self.name = name
        self.available = tuple(available)

    def __str__(self):
        return f"unknown system {self.name!r}; available: {', '.join(self.available)}"


class ConfigError(SMIOError):
    """Raised for invalid experiment configurations"""
