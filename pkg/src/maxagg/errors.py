"""Exception hierarchy shared by all maxagg modules."""
from __future__ import annotations


class MaxAggError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgument(MaxAggError, ValueError):
    pass


class SingularPointError(MaxAggError, ValueError):
    pass


class ConvergenceFailure(MaxAggError):
    """Adaptive integrator stopped before reaching the requested endpoint.

    ``reached`` holds the interval ``(y_lo, y_hi)`` that was covered.
    """

    def __init__(self, message: str, reached: tuple[float, float]):
        super().__init__(f"{message} (reached y in [{reached[0]:.3e}, {reached[1]:.6f}])")
        self.reached = reached


class NoBranchError(MaxAggError):
    pass


class BracketFailure(MaxAggError):
    def __init__(self, message: str, scanned: tuple[float, float]):
        super().__init__(f"{message} (scanned G(1/2) in [{scanned[0]:.4g}, {scanned[1]:.4g}])")
        self.scanned = scanned


class InsufficientData(MaxAggError):
    pass


class DegenerateState(MaxAggError):
    pass


class NonConvergence(MaxAggError):
    def __init__(self, message: str, residual_history: list[float]):
        super().__init__(message)
        self.residual_history = residual_history
