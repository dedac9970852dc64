"""Measurement-feedback cooling of frustration-free lattice models."""

__version__ = "0.1.0"

from .basis import (
    LocalMove,
    SectorBasis,
    enumerate_full_space,
    enumerate_magnetization_sector,
    enumerate_reachable_sector,
)
from .models import (
    LayeredModel,
    PauliString,
    ProjectorTerm,
    build_cluster_ising,
    build_fredkin,
    build_heisenberg_2d,
    build_heisenberg_chain,
    build_heisenberg_single_particle,
    build_model,
    build_qdm,
)
from .statevec import State, apply_pauli, energy, fidelity, measure_term, term_expectation

__all__ = [
    "LocalMove",
    "SectorBasis",
    "enumerate_full_space",
    "enumerate_magnetization_sector",
    "enumerate_reachable_sector",
    "LayeredModel",
    "PauliString",
    "ProjectorTerm",
    "build_cluster_ising",
    "build_fredkin",
    "build_heisenberg_2d",
    "build_heisenberg_chain",
    "build_heisenberg_single_particle",
    "build_model",
    "build_qdm",
    "State",
    "apply_pauli",
    "energy",
    "fidelity",
    "measure_term",
    "term_expectation",
]
