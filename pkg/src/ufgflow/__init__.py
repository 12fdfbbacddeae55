"""Gradient-flow ground states for a unitary-Fermi-gas density functional."""

__version__ = "0.1.0"

from .grid import Field, Grid, build_grid  # noqa: E402
from .model import (EnergyBreakdown, Harmonic, HarmonicPlusLattice, Params, Tabulated,  # noqa: E402
                    energy, optical_lattice_1d)
from .gfdn import GroundStateResult, SolverConfig, compute_ground_state  # noqa: E402
from .vortex import compute_central_vortex, count_vortices, rotating_ground_state  # noqa: E402

__all__ = [
    "EnergyBreakdown", "Field", "Grid", "GroundStateResult", "Harmonic", "HarmonicPlusLattice",
    "Params", "SolverConfig", "Tabulated", "build_grid", "compute_central_vortex",
    "compute_ground_state", "count_vortices", "energy", "optical_lattice_1d",
    "rotating_ground_state", "__version__",
]
