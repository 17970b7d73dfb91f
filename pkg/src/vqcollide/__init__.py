"""Variational quantum simulation of ion-atom charge transfer (H+ + H)."""

from .avqds import AdaptiveAnsatz, adapt_and_step, evolve_avqds, mclachlan_matrices
from .collision import TrajectoryContext, build_frames, channel_matrices, encode_trajectory
from .config import SweepConfig, load_config
from .exact import propagate_exact
from .fermion import SecondQuantizedHamiltonian, bk_transform, build_bk_sets
from .observables import SimulationRecord, cross_section, variational_fidelity_bound
from .pauli import LcuHamiltonian, PauliString, StateVector, pauli_mul
from .qas import build_moment_basis, evolve_qas, measure_model
from .reference import compare_reference, load_reference
from .sweep import run_sweep, run_trajectory

__version__ = "0.1.0"

__all__ = [
    "AdaptiveAnsatz", "LcuHamiltonian", "PauliString", "SecondQuantizedHamiltonian",
    "SimulationRecord", "StateVector", "SweepConfig", "TrajectoryContext",
    "adapt_and_step", "bk_transform", "build_bk_sets", "build_frames", "build_moment_basis",
    "channel_matrices", "compare_reference", "cross_section", "encode_trajectory",
    "evolve_avqds", "evolve_qas", "load_config", "load_reference", "mclachlan_matrices",
    "measure_model", "pauli_mul", "propagate_exact", "run_sweep", "run_trajectory",
    "variational_fidelity_bound",
]
