"""Exception hierarchy shared by all modules."""


class NumericalError(RuntimeError):
    """Base class for non-convergence and divergence failures."""


class ConvergenceError(NumericalError):
    def __init__(self, message, last_iterate=None, residual=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class SingularMatrixError(NumericalError):
    pass


class DivergenceError(NumericalError):
    def __init__(self, message, step=None, state=None):
        super().__init__(message)
        self.step = step
        self.state = state


class OverflowGuardError(NumericalError):
    """Raised when a direct Jacobian product would leave the safe range."""
