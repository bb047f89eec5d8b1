"""
Errors
Exception hierarchy shared by the graph, solver and hierarchy modules
"""

from typing import Any, Dict, Optional


class UstError(ValueError):
    """Base class for every error raised by this package"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.details = details or {}


class PreconditionError(UstError):
    """An operation was called outside its precondition"""


class InstanceError(UstError):
    """Malformed graph, partition, instance or decomposition data"""


class ConnectivityError(UstError):
    """A graph that must be connected is not (or could not be generated so)"""


class RetryBudgetError(UstError):
    """A resampling loop ran out of attempts.

    ``best`` holds the best attempt observed so the caller may still accept
    it with a warning.
    """

    def __init__(self, message: str, best: Any = None,
                 details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details)
        self.best = best


class SolverInvariantError(UstError):
    """A guarantee a solver relies on failed at runtime"""
