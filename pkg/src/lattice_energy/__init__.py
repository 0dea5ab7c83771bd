"""Gaussian energies of periodic point configurations."""

from .exceptions import (
    ConvergenceError,
    DegenerateLatticeError,
    DomainError,
    LatticeEnergyError,
    OptimizationError,
    ParseError,
    UnsupportedDimensionError,
    ValidationError,
)
from .geometry import GaussianPotential, Lattice, PeriodicConfig
from .energy import energy, energy_direct, energy_dual, f_gamma, lattice_sum
from .configs import parse_config

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "DegenerateLatticeError",
    "DomainError",
    "GaussianPotential",
    "Lattice",
    "LatticeEnergyError",
    "OptimizationError",
    "ParseError",
    "PeriodicConfig",
    "UnsupportedDimensionError",
    "ValidationError",
    "energy",
    "energy_direct",
    "energy_dual",
    "f_gamma",
    "lattice_sum",
    "parse_config",
]
