"""Finite-volume ALE-WENO solver for the shallow water equations."""

__version__ = "0.1.0"

from .quadrature import GRAVITY
from .scheme import (BottomMode, BoundaryCondition, NumericalFailure,
                     SchemeConfig, SchemeVariant)

__all__ = [
    "GRAVITY",
    "BottomMode",
    "BoundaryCondition",
    "NumericalFailure",
    "SchemeConfig",
    "SchemeVariant",
]
