"""Exception types shared across the package."""


class InsufficientDataError(ValueError):
    """Raised when an operation needs more observations than it was given."""


class SequencingError(RuntimeError):
    """Raised when levels or observations arrive out of order."""


class NotStoppedError(RuntimeError):
    """Raised when a prediction is requested before a run has converged."""
