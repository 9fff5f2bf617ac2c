"""Second-level randomness testing with the Kolmogorov-Smirnov test."""
from ._version import __version__
from .kernels import BACKEND

__all__ = ["__version__", "BACKEND"]
