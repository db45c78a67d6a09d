"""Factorized unitary coupled cluster with a quadratic expansion of the small
angles, benchmarked against full configuration interaction."""

from .ansatz import UccFactor, apply_factor, apply_factor_derivative, build_state
from .determinant import ContractViolation, Excitation, enumerate_excitations, hartree_fock
from .engine import UccEngine
from .fci import FciSolution, davidson, fci_solve, track_hf_state
from .hamiltonian import apply_hamiltonian, expectation, matrix_element
from .integrals import FcidumpError, IntegralSet, hf_energy, parse_fcidump, read_fcidump
from .mp2 import RankedEntry, mp2_amplitudes, mp2_energy, partition
from .solver import QuccConfig, QuccResult, promote_and_iterate, solve_angle_update, ucc_energy

__all__ = [
    "ContractViolation", "Excitation", "FcidumpError", "FciSolution", "IntegralSet",
    "QuccConfig", "QuccResult", "RankedEntry", "UccEngine", "UccFactor",
    "apply_factor", "apply_factor_derivative", "apply_hamiltonian", "build_state",
    "davidson", "enumerate_excitations", "expectation", "fci_solve", "hartree_fock",
    "hf_energy", "matrix_element", "mp2_amplitudes", "mp2_energy", "parse_fcidump",
    "partition", "promote_and_iterate", "read_fcidump", "solve_angle_update",
    "track_hf_state", "ucc_energy",
]
