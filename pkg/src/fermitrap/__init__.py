"""Thermal states of the harmonic trap: spectral calculus, semiclassical norms and bounds."""

from .spectral_core import LadderElements, ShellTable, build_shell_table
from .thermal_states import (
    ModelParams,
    OccupationProfile,
    maxwell_boltzmann,
    partition_closed,
    partition_spectral,
    solve_chemical_potential,
)

__all__ = [
    "LadderElements",
    "ModelParams",
    "OccupationProfile",
    "ShellTable",
    "build_shell_table",
    "maxwell_boltzmann",
    "partition_closed",
    "partition_spectral",
    "solve_chemical_potential",
]

__version__ = "0.1.0"
