"""Numerical certification of Heintze-Karcher type inequalities, Minkowski
formulas and their rigidity cases for star-shaped hypersurfaces in warped
product manifolds."""

from ._kernels import BACKEND
from .errors import WarpcheckError

__version__ = "0.1.0"
__all__ = ["BACKEND", "WarpcheckError", "__version__"]
