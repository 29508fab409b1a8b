"""Numerical toolkit for a maximal-aggregation (coarsening) model.

Modules: ``core`` (types), ``selfsimilar`` (profile shooting and branches),
``boxmodel`` (discrete simulation), ``mildsolver`` (Picard oracle),
``diagnostics`` (long-time analytics), ``cli`` and ``experiments``.
"""
from .core import DiscreteDensity, Grid1D, Params, SampledProfile, make_gaussian_initial
from .errors import (
    BracketFailure, ConvergenceFailure, DegenerateState, InsufficientData, InvalidArgument,
    MaxAggError, NoBranchError, NonConvergence, SingularPointError,
)

__all__ = [
    "DiscreteDensity", "Grid1D", "Params", "SampledProfile", "make_gaussian_initial",
    "BracketFailure", "ConvergenceFailure", "DegenerateState", "InsufficientData", "InvalidArgument",
    "MaxAggError", "NoBranchError", "NonConvergence", "SingularPointError",
]
__version__ = "0.1.0"
