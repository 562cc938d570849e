"""Exception hierarchy shared by all nsselab modules."""


class NsseError(Exception):
    """Base class for errors raised by nsselab."""


class InvalidDimensionError(NsseError, ValueError):
    pass


class DimensionMismatchError(NsseError, ValueError):
    pass


class NotHermitianError(NsseError, ValueError):
    pass


class UnknownModelError(NsseError, ValueError):
    pass


class ParameterDomainError(NsseError, ValueError):
    pass


class StepFailureError(NsseError, ArithmeticError):
    """A semi-implicit step could not solve its linear system."""


class BlowUpError(NsseError, ArithmeticError):
    """A trajectory produced a non-finite state."""

    def __init__(self, step, trajectory=None, message=None):
        self.step = step
        self.trajectory = trajectory
        if message is None:
            where = f"step {step}"
            if trajectory is not None:
                where = f"trajectory {trajectory}, " + where
            message = f"non-finite state at {where}"
        super().__init__(message)


class DegenerateStateError(NsseError, ArithmeticError):
    """A state of zero norm was met where a normalization was required."""


class GridMismatchError(NsseError, ValueError):
    pass


class IntegrationFailureError(NsseError, ArithmeticError):
    pass


class NonUniqueSteadyStateError(NsseError):
    """The Lindblad generator does not have a one-dimensional kernel.

    The kernel dimension and a Hermitian basis of the kernel are attached so
    callers can report them.
    """

    def __init__(self, kernel_dim, basis):
        self.kernel_dim = kernel_dim
        self.basis = basis
        super().__init__(f"stationary kernel has dimension {kernel_dim}, expected 1")


class UnboundedFormError(NsseError, ArithmeticError):
    pass


class OutOfScopeError(NsseError, ValueError):
    pass


class ConfigError(NsseError, ValueError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        loc = ""
        if path is not None:
            loc = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(loc + message)
