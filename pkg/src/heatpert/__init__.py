"""Schrödinger perturbations of Gaussian kernels: series, 4G constants, Kato bounds."""

__version__ = "0.1.0"

from .errors import ConvergenceError, DomainError, HeatpertError, InvariantViolation
from .kernels import GaussianKernel
from .kato import Potential
from .superadd import SuperadditiveQ
from .numerics import QuadConfig, RngStream

__all__ = [
    "__version__", "ConvergenceError", "DomainError", "HeatpertError", "InvariantViolation",
    "GaussianKernel", "Potential", "SuperadditiveQ", "QuadConfig", "RngStream",
]
