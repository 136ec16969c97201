"""Dynamics of a massless particle around a straight segment with
linearly varying mass density: closed-form potential, Hamiltonian
propagation, circular-orbit families, Poincare sections and
quasi-periodic orbit reconstruction."""

from .params import ScaledParams, SegmentParams, derive_segment, from_scaled, to_scaled
from .potential import AuxSD, aux_sd, force_scaled, potential_physical, potential_scaled
from .dynamics import (
    CartState,
    CylState,
    ReducedState,
    Trajectory,
    energy,
    eom_cartesian,
    eom_cylindrical,
    eom_reduced,
    propagate,
)
from .circular import CircularOrbit, solve_circular, solve_circular_for_c
from .poincare import FixedPoint, PoincareSection, SectionSpec, compute_section, find_fixed_point, return_map
from .reconstruction import ReconstructedOrbit, commensurability, reconstruct

__all__ = [
    "AuxSD",
    "CartState",
    "CircularOrbit",
    "CylState",
    "FixedPoint",
    "PoincareSection",
    "ReconstructedOrbit",
    "ReducedState",
    "ScaledParams",
    "SectionSpec",
    "SegmentParams",
    "Trajectory",
    "aux_sd",
    "commensurability",
    "compute_section",
    "derive_segment",
    "energy",
    "eom_cartesian",
    "eom_cylindrical",
    "eom_reduced",
    "find_fixed_point",
    "force_scaled",
    "from_scaled",
    "potential_physical",
    "potential_scaled",
    "propagate",
    "reconstruct",
    "return_map",
    "solve_circular",
    "solve_circular_for_c",
    "to_scaled",
]

__version__ = "0.1.0"
