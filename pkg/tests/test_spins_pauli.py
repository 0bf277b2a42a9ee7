import itertools

import numpy as np
import pytest

from lindblad_qfi import PureState, bell_state, qfi_theorem1
from lindblad_qfi.classical import ClassicalInstance, classical_regularity
from lindblad_qfi.fisher import bell_state_qfi
from lindblad_qfi.optimize import minimize_gauge
from lindblad_qfi.scenarios.pauli import (
    commuting_pauli_uniform_qfi,
    local_paulis,
    pauli_code,
    pauli_label,
    pauli_matrix,
    pauli_model,
    paulis_commute,
    product_state,
)
from lindblad_qfi.scenarios.spins import (
    collective_decay_value,
    collective_operators,
    collective_spin_model,
    collective_spin_qfi,
    collective_spin_state,
    stated_collective_formula,
)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_collective_operator_algebra(n):
    ops = collective_operators(n)
    j = n / 2
    comm = ops["x"] @ ops["y"] - ops["y"] @ ops["x"]
    assert np.allclose(comm, 1j * ops["z"])
    casimir = ops["x"] @ ops["x"] + ops["y"] @ ops["y"] + ops["z"] @ ops["z"]
    assert np.allclose(casimir, j * (j + 1) * np.eye(n + 1))


def _symmetric_embedding(n):
    """Isometry from the Dicke basis (m = n/2 .. -n/2) into n qubits."""
    cols = []
    for k in range(n + 1):
        v = np.zeros(2**n)
        for flips in itertools.combinations(range(n), k):
            idx = sum(1 << (n - 1 - q) for q in flips)
            v[idx] = 1.0
        cols.append(v / np.linalg.norm(v))
    return np.array(cols).T


@pytest.mark.parametrize("n", [2, 3])
def test_collective_operators_match_qubit_sums(n):
    """Restricted to the symmetric subspace, J_- = sum sigma_- and J_z = sum sigma_z / 2."""
    sm = np.array([[0, 0], [1, 0]], dtype=complex)
    total = sum(
        np.kron(np.kron(np.eye(2**q), sm), np.eye(2 ** (n - q - 1))) for q in range(n)
    )
    emb = _symmetric_embedding(n)
    assert np.allclose(emb.T @ total @ emb, collective_operators(n)["minus"])
    sz = np.diag([1.0, -1.0])
    jz = sum(np.kron(np.kron(np.eye(2**q), sz), np.eye(2 ** (n - q - 1))) for q in range(n)) / 2
    assert np.allclose(emb.T @ jz @ emb, collective_operators(n)["z"])


@pytest.mark.parametrize("n,expect", [(1, 4.0), (2, 8.0), (3, 16.0), (4, 24.0), (5, 36.0)])
def test_collective_decay_values(n, expect):
    out = collective_spin_qfi(n, "decay", total_time=1.0)
    assert out["state_value"] == pytest.approx(expect, rel=1e-10)
    assert collective_decay_value(n) == expect
    assert out["optimum"] == pytest.approx(expect, rel=1e-6)
    # the commonly quoted closed form is four times larger
    assert out["stated_formula"] == pytest.approx(4 * expect)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_collective_dephasing_ghz(n):
    model = collective_spin_model(n, "dephasing", total_time=2.0)
    state, _ = collective_spin_state(n, "dephasing")
    assert qfi_theorem1(state, model) == pytest.approx(2.0 * n**2, rel=1e-10)
    assert stated_collective_formula(n, "dephasing", 2.0) == 2.0 * n**2


def test_collective_dephasing_n4_value():
    out = collective_spin_qfi(4, "dephasing", optimise=False)
    assert out["value"] == pytest.approx(16.0, rel=1e-10)


def test_collective_dephasing_single_spin_vanishes():
    # for n = 1 J_z lies in the span of the noise images on every state
    out = collective_spin_qfi(1, "dephasing", optimise=False)
    assert out["value"] == pytest.approx(0.0, abs=1e-12)


def test_collective_unknown_scenario():
    with pytest.raises(ValueError):
        collective_spin_model(2, "bogus")


def test_pauli_encoding():
    assert pauli_code("xzi") == (1, 3, 0)
    assert pauli_label((2, 0)) == "YI"
    assert np.allclose(pauli_matrix("XZ"), np.kron([[0, 1], [1, 0]], np.diag([1, -1])))
    assert paulis_commute("XX", "ZZ")
    assert not paulis_commute("XI", "ZI")
    with pytest.raises(ValueError):
        pauli_code("XQ")
    with pytest.raises(ValueError):
        pauli_model(2, ["XX"], ["XX"])
    with pytest.raises(ValueError):
        pauli_model(2, ["II"])
    with pytest.raises(ValueError):
        pauli_model(2, ["XXX"])


@pytest.mark.parametrize("k", [1, 2, 3])
def test_pauli_bell_state_recovers_noiseless(k):
    rng = np.random.default_rng(k)
    strings = [pauli_label(c) for c in itertools.product(range(4), repeat=2) if any(c)]
    picks = rng.choice(len(strings), size=k + 2, replace=False)
    sigs = [strings[i] for i in picks[:k]]
    noises = [strings[i] for i in picks[k:]]
    model = pauli_model(2, sigs, noises)
    assert bell_state_qfi(model) == pytest.approx(4.0 * k, rel=1e-10)
    explicit = qfi_theorem1(bell_state(4), model)
    assert explicit == pytest.approx(4.0 * k, rel=1e-10)


def test_example_product_state_local_noise():
    noises = local_paulis(2)
    model = pauli_model(2, ["XX"], noises)
    assert qfi_theorem1(product_state("00"), model) == pytest.approx(4.0, rel=1e-10)


def test_single_qubit_x_signal_yz_noise_unextended_zero():
    model = pauli_model(1, ["X"], ["Y", "Z"])
    rng = np.random.default_rng(0)
    for _ in range(20):
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        assert qfi_theorem1(PureState.from_vector(v), model) < 1e-10
    assert bell_state_qfi(model) == pytest.approx(4.0, rel=1e-10)


def test_commuting_example_zz_with_zi():
    assert commuting_pauli_uniform_qfi(pauli_model(2, ["ZZ"], ["ZI"])) == pytest.approx(4.0, rel=1e-10)


def test_commuting_single_z_no_noise():
    assert commuting_pauli_uniform_qfi(pauli_model(1, ["Z"])) == pytest.approx(4.0, rel=1e-10)
    plus = PureState.from_vector(np.array([1, 1]) / np.sqrt(2))
    assert qfi_theorem1(plus, pauli_model(1, ["Z"])) == pytest.approx(4.0, rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_random_commuting_diagonal_set(seed):
    rng = np.random.default_rng(seed)
    diag = [pauli_label(c) for c in itertools.product((0, 3), repeat=3) if any(c)]
    picks = rng.choice(len(diag), size=int(rng.integers(2, 6)), replace=False)
    k = int(rng.integers(1, len(picks)))
    model = pauli_model(3, [diag[i] for i in picks[:k]], [diag[i] for i in picks[k:]])
    assert commuting_pauli_uniform_qfi(model, seed=seed) == pytest.approx(4.0 * k, rel=1e-10)
    assert minimize_gauge(model).value == pytest.approx(4.0 * k, rel=1e-6)


def test_commuting_check_rejects_noncommuting():
    with pytest.raises(ValueError):
        commuting_pauli_uniform_qfi(pauli_model(1, ["X"], ["Z"]))


def test_commuting_pauli_diagonals_are_not_regular():
    z = np.array([1.0, 1.0, -1.0, -1.0]) / 2
    zz = np.array([1.0, -1.0, -1.0, 1.0]) / 2
    assert not classical_regularity(ClassicalInstance((z, zz)))
