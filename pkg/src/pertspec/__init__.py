"""Numerical laboratory for first-order perturbation of vector spectral measures."""

from .errors import EigenSolverError, NumericalError, QuadratureError, ValidationError

__version__ = "0.1.0"

__all__ = ["EigenSolverError", "NumericalError", "QuadratureError", "ValidationError", "__version__"]
