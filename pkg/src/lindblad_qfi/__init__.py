"""Optimal-control quantum Fisher information for weak Lindblad decay rates."""

__version__ = "0.1.0"

from .core import JumpModel, MixedState, PureState, bell_state, extend_model, hs_orthonormalize, image_basis
from .fisher import (
    cfi,
    measure_reset_probabilities,
    qfi_noiseless,
    qfi_one_noise,
    qfi_sld,
    qfi_theorem1,
    qfi_two_noise,
)
from .optimize import check_optimality, minimize_gauge, optimal_state_search

__all__ = [
    "JumpModel", "MixedState", "PureState", "bell_state", "extend_model", "hs_orthonormalize",
    "image_basis", "cfi", "measure_reset_probabilities", "qfi_noiseless", "qfi_one_noise", "qfi_sld",
    "qfi_theorem1", "qfi_two_noise", "check_optimality", "minimize_gauge", "optimal_state_search",
]
