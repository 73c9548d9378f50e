"""Exception hierarchy shared by all urnfield modules."""


class UrnFieldError(Exception):
    """Base class for all library errors."""


class DimensionMismatchError(UrnFieldError):
    """Operands live on incompatible grids (different upper or K)."""


class InputError(UrnFieldError):
    """Malformed or inconsistent input data (bad CDF, bad weights, bad spec)."""


class ParameterError(UrnFieldError):
    """Reinforcement-pair or run-parameter validation failure."""


class ContractViolationError(UrnFieldError):
    """A caller-asserted precondition was detected to be false (e.g. a map
    passed as monotone decreased somewhere)."""


class DomainError(UrnFieldError):
    """Point outside the admissible domain (e.g. x + y = 0)."""


class TruncationError(UrnFieldError):
    """A simulation hit max_steps before reaching its stopping threshold.

    Carries the partial result so callers can decide what to do with it.
    """

    def __init__(self, message, z=None, steps=None, diagnostics=None):
        super().__init__(message)
        self.z = z
        self.steps = steps
        self.diagnostics = diagnostics
