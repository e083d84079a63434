"""Exception hierarchy shared by the solvers and the command line front end."""


class FairshareError(Exception):
    """Base class for every error raised by this package."""


class InputError(FairshareError, ValueError):
    """Malformed or inconsistent input data."""


class SolverError(FairshareError, RuntimeError):
    """A solver could not produce a result for well-formed input."""


class SolverStallError(SolverError):
    """The simplex iteration limit was exceeded."""


class NonConvergenceError(SolverError):
    """An iterative procedure hit its step cap before reaching tolerance.

    The partial trace is kept on the exception so callers can inspect it.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class SizeLimitError(FairshareError):
    """Instance exceeds a tractability guard."""
