"""Pauli-string jump operators on n qubits."""

from __future__ import annotations

import functools
import itertools

import numpy as np

from ..core import JumpModel, PureState
from ..fisher import qfi_theorem1

PAULI_LETTERS = "IXYZ"
_SINGLE = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.diag([1.0, -1.0]).astype(complex),
)


def pauli_code(spec) -> tuple[int, ...]:
    """'XZI' or [1, 3, 0] -> base-4 code tuple (I=0, X=1, Y=2, Z=3)."""
    if isinstance(spec, str):
        try:
            return tuple(PAULI_LETTERS.index(ch) for ch in spec.upper())
        except ValueError:
            raise ValueError(f"invalid Pauli string {spec!r}") from None
    code = tuple(int(c) for c in spec)
    if any(c not in (0, 1, 2, 3) for c in code):
        raise ValueError(f"invalid Pauli code {spec!r}")
    return code


def pauli_label(code) -> str:
    return "".join(PAULI_LETTERS[c] for c in code)


def pauli_matrix(spec) -> np.ndarray:
    return functools.reduce(np.kron, (_SINGLE[c] for c in pauli_code(spec)))


def paulis_commute(p, q) -> bool:
    """Two strings commute iff they anticommute on an even number of sites."""
    anti = sum(1 for a, b in zip(pauli_code(p), pauli_code(q)) if a and b and a != b)
    return anti % 2 == 0


def pauli_model(n: int, signals, noises=(), total_time: float = 1.0) -> JumpModel:
    """Jump model with Pauli-string signals and noises; strings must be distinct and non-identity."""
    codes = [pauli_code(s) for s in list(signals) + list(noises)]
    if any(len(c) != n for c in codes):
        raise ValueError(f"every Pauli string must have length {n}")
    if any(not any(c) for c in codes):
        raise ValueError("the identity is not a valid jump operator")
    if len(set(codes)) != len(codes):
        raise ValueError("Pauli strings must be distinct")
    k = len(list(signals))
    mats = [pauli_matrix(c) for c in codes]
    return JumpModel(tuple(mats[:k]), tuple(mats[k:]), total_time=total_time)


def local_paulis(n: int) -> list[str]:
    """All 3n weight-one strings."""
    out = []
    for site in range(n):
        for letter in "XYZ":
            s = ["I"] * n
            s[site] = letter
            out.append("".join(s))
    return out


def joint_eigenbasis(ops, seed: int = 0) -> np.ndarray:
    """Simultaneous eigenbasis of commuting Hermitian operators from a random combination."""
    rng = np.random.default_rng(seed)
    h = sum(rng.normal() * op for op in ops)
    _, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    return v


def commuting_pauli_uniform_qfi(model: JumpModel, seed: int = 0) -> float:
    """Optimal-control QFI of the uniform superposition over a joint eigenbasis of all operators."""
    ops = list(model.signals) + list(model.noises)
    for a, b in itertools.combinations(ops, 2):
        if np.abs(a @ b - b @ a).max() > 1e-12:
            raise ValueError("operators do not commute")
    v = joint_eigenbasis(ops, seed)
    psi = PureState.from_vector(v.sum(axis=1))
    return qfi_theorem1(psi, model)


def product_state(bits: str) -> PureState:
    """Computational product state; '0' = up (sigma_z = +1), '1' = down."""
    vec = functools.reduce(np.kron, ([1.0, 0.0] if b == "0" else [0.0, 1.0] for b in bits))
    return PureState.from_vector(np.asarray(vec, dtype=complex))
