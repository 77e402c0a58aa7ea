"""Quasi-free KMS states, their Euclidean Green functions and thermal processes."""
from .errors import KMSError
from .quasifree import EuclideanWord, ThermalContext, thermal_context
from .spectral import MatrixModel, QuadratureModel, eigendecompose, quadrature_model

__version__ = "0.1.0"

__all__ = [
    "EuclideanWord",
    "KMSError",
    "MatrixModel",
    "QuadratureModel",
    "ThermalContext",
    "eigendecompose",
    "quadrature_model",
    "thermal_context",
    "__version__",
]
