"""Simulation and diagnostics for compressible elastodynamics and Oldroyd-type viscoelasticity."""

from .core import (
    ConservedState,
    DegenerateDensity,
    Grid,
    InvalidParameter,
    PhysParams,
    State,
    to_conserved,
    to_primitive,
)
from .stencils import StencilConfig

__version__ = "0.1.0"

__all__ = [
    "ConservedState",
    "DegenerateDensity",
    "Grid",
    "InvalidParameter",
    "PhysParams",
    "State",
    "StencilConfig",
    "to_conserved",
    "to_primitive",
]
