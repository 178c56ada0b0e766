"""Exception types shared across the package."""


class DbubbleError(Exception):
    """Base class for all domain failures raised by this package."""


class DomainError(DbubbleError, ValueError):
    pass


class NoSuchPoint(DbubbleError):
    """The requested curve never reaches the given height."""


class StepFailure(DbubbleError):
    pass


class NoConvergence(DbubbleError):
    def __init__(self, message, trace=None, best=None):
        super().__init__(message)
        self.trace = list(trace or [])
        self.best = best


class ResolutionError(DbubbleError):
    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class MalformedVertex(DbubbleError):
    pass


class PreconditionError(DbubbleError):
    pass


class TreeError(DbubbleError):
    pass


class AdmissionError(DbubbleError):
    pass
