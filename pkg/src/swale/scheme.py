"""Scheme selection knobs shared by the 1D and 2D solvers."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .limiter import EPS_FLOOR
from .reconstruction import EPS_DEFAULT


class SchemeVariant(str, Enum):
    NONWB = "non-wb"
    WB_HYDRO = "wb-hydrostatic"
    WB_SOURCE = "wb-source"

    @property
    def well_balanced(self) -> bool:
        return self is not SchemeVariant.NONWB


class BottomMode(str, Enum):
    EVOLVED = "evolved"
    L2_PROJECTION = "l2-projection"


class BoundaryCondition(str, Enum):
    PERIODIC = "periodic"
    TRANSMISSIVE = "transmissive"
    REFLECTIVE = "reflective"


class NumericalFailure(RuntimeError):
    """NaN, blow-up or an unrecoverable time-step rejection during a run."""


@dataclass
class SchemeConfig:
    variant: SchemeVariant = SchemeVariant.NONWB
    bottom_mode: BottomMode = BottomMode.EVOLVED
    cfl: float = 0.6
    eps_weno: float = EPS_DEFAULT
    eps_floor: float = EPS_FLOOR
    limiter: bool = True
    characteristic: bool = True   # 1D interface decomposition (non-WB only)
    max_steps: int = 10_000_000
    # Honour the rigorous positivity bound instead of the conventional
    # wave-transit step size (needed only when cfl exceeds the bound).
    enforce_positivity_dt: bool = False

    def __post_init__(self):
        self.variant = SchemeVariant(self.variant)
        self.bottom_mode = BottomMode(self.bottom_mode)
        if self.cfl <= 0.0:
            raise ValueError("cfl must be positive")
