"""
Exception hierarchy for radial deep net construction and experiments.
"""

from typing import Any, Dict, List, Optional


class RadialNetError(Exception):
    """Base class for every error raised by the package."""
    pass


class ArgumentError(RadialNetError, ValueError):
    """Raised when an operation's precondition is violated."""
    pass


class EvaluationError(RadialNetError):
    """Raised when a function produces a non-finite value."""

    def __init__(self, message: str, point: Any = None):
        super().__init__(message)
        self.point = point


class UnsupportedOrderError(RadialNetError):
    """Raised when a derivative order, degree or smoothness is out of reach."""
    pass


class SearchFailureError(RadialNetError):
    """Raised when the anchor search finds no admissible point."""

    def __init__(self, message: str, best_candidate: Any = None, best_value: Any = None):
        super().__init__(message)
        self.best_candidate = best_candidate
        self.best_value = best_value


class PrecisionError(RadialNetError):
    """Raised when the working precision is insufficient or contexts are mixed."""

    def __init__(self, message: str, required_bits: Optional[int] = None):
        super().__init__(message)
        self.required_bits = required_bits


class ParseError(RadialNetError):
    """Raised when a net document is malformed."""

    def __init__(self, message: str, location: str = "$"):
        super().__init__(f"{location}: {message}")
        self.location = location


class ConstructionError(RadialNetError):
    """Raised when a construction cannot meet its constraints."""

    def __init__(self, message: str, achieved: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.achieved = achieved or {}


class TrainingError(RadialNetError):
    """Raised when every training restart diverges."""

    def __init__(self, message: str, diagnostics: Optional[List[Dict[str, Any]]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class ConfigurationError(RadialNetError):
    """Raised for invalid configuration or experiment documents."""
    pass
