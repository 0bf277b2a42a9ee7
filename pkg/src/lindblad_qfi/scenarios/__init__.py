"""Worked model families: qubit cases, collective spins, Pauli channels and a bosonic mode."""

from .bosonic import BosonicAlgebra, bosonic_states, bosonic_swe_model, bosonic_swe_qfi
from .pauli import commuting_pauli_uniform_qfi, pauli_matrix, pauli_model
from .qubit import QubitCase, hierarchy_report, out_of_plane_transition, qubit_case_optimum
from .spins import collective_spin_model, collective_spin_qfi, collective_spin_state

__all__ = [
    "BosonicAlgebra", "bosonic_states", "bosonic_swe_model", "bosonic_swe_qfi",
    "commuting_pauli_uniform_qfi", "pauli_matrix", "pauli_model",
    "QubitCase", "hierarchy_report", "out_of_plane_transition", "qubit_case_optimum",
    "collective_spin_model", "collective_spin_qfi", "collective_spin_state",
]
