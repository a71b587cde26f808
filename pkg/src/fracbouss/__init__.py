"""Pseudo-spectral tools for a 2-D Boussinesq system with fractional thermal
dissipation and temperature-dependent viscosity."""

from .spectral import Grid, SpectralField
from .solver import FlowState, InitSpec, PhysParams, make_initial_data, step

__version__ = "0.1.0"

__all__ = ["Grid", "SpectralField", "FlowState", "InitSpec", "PhysParams",
           "make_initial_data", "step", "__version__"]
