import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lindblad_qfi import JumpModel, MixedState, qfi_theorem1
from lindblad_qfi.classical import (
    ClassicalInstance,
    chebyshev_residual,
    classical_optimal,
    classical_regularity,
    instance_from_model,
    leading_subinstance,
    random_classical_instance,
    random_regular_instance,
    support_length_scan,
)
from lindblad_qfi.optimize import minimize_gauge, optimal_state_search


def _diag_qfi(inst, p, T=1.0):
    return qfi_theorem1(MixedState.from_matrix(np.diag(p).astype(complex)), inst.model(T))


def test_instance_validation():
    with pytest.raises(ValueError):
        ClassicalInstance((np.array([1.0, 0.0, 0.0]),))
    with pytest.raises(ValueError):
        ClassicalInstance((np.array([1.0, -1.0, 0.0]),))
    ClassicalInstance((np.array([1.0, -1.0, 0.0]) / np.sqrt(2),))


def test_three_level_worked_example():
    inst = ClassicalInstance((np.array([1.0, 0.0, -1.0]) / np.sqrt(2),))
    opt = classical_optimal(inst, total_time=1.0)
    assert opt.support == (0, 2)
    assert opt.qfi == pytest.approx(2.0, rel=1e-12)
    assert np.allclose(opt.p, [0.5, 0.0, 0.5])


@pytest.mark.parametrize("seed", range(20))
def test_regular_square_instances_closed_form(seed):
    """d = N + 2: the formula 4T ||l||_2^4 / ||l||_1^2 with p proportional to |l|."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(0, 4))
    inst = random_regular_instance(n + 2, n, rng)
    opt = classical_optimal(inst, 2.0)
    l_perp = inst.signal
    assert opt.qfi == pytest.approx(8.0 * np.sum(l_perp**2) ** 2 / np.sum(np.abs(l_perp)) ** 2, rel=1e-6)
    assert np.allclose(opt.p, np.abs(l_perp) / np.abs(l_perp).sum(), atol=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(3, 7))
def test_lp_optimum_matches_quantum_routes(seed, d):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(0, d - 2))
    inst = random_classical_instance(d, n, rng)
    opt = classical_optimal(inst)
    assert _diag_qfi(inst, opt.p) == pytest.approx(opt.qfi, rel=1e-6, abs=1e-12)
    assert opt.gauge_value == pytest.approx(opt.qfi, rel=1e-6)


@pytest.mark.parametrize("seed", range(4))
def test_classical_value_agrees_with_gauge_minimisation(seed):
    rng = np.random.default_rng(seed)
    inst = random_regular_instance(5, 2, rng)
    opt = classical_optimal(inst)
    res = minimize_gauge(inst.model(), seed=seed)
    assert res.value == pytest.approx(opt.qfi, rel=1e-6)
    ext = optimal_state_search(inst.model(), "extended", seed=seed)
    assert ext.value == pytest.approx(opt.qfi, rel=1e-6)


def test_chebyshev_residual_equioscillates():
    rng = np.random.default_rng(3)
    inst = random_regular_instance(8, 2, rng)
    _, a = chebyshev_residual(inst)
    amax = np.abs(a).max()
    assert np.sum(np.abs(a) >= (1 - 1e-6) * amax) == 4


def test_regularity_detects_degenerate_rows():
    l = np.array([1.0, 1.0, -1.0, -1.0]) / 2
    n = np.array([1.0, -1.0, 1.0, -1.0]) / 2
    assert not classical_regularity(ClassicalInstance((l, n)))
    rng = np.random.default_rng(0)
    assert classical_regularity(random_classical_instance(6, 2, rng))


def test_leading_subinstance_and_uniform_sampler():
    rng = np.random.default_rng(4)
    inst = random_classical_instance(10, 4, rng, sampler="uniform")
    sub = leading_subinstance(inst, 2)
    assert sub.n_noises == 2
    assert np.array_equal(sub.signal, inst.signal)
    with pytest.raises(ValueError):
        random_classical_instance(10, 4, rng, sampler="cauchy")


def test_instance_from_model_scaling():
    rng = np.random.default_rng(5)
    inst = random_regular_instance(6, 2, rng)
    sig = 3.0 * inst.signal + 0.4 * inst.l[1] + 2.0
    model = JumpModel((np.diag(sig).astype(complex),), tuple(np.diag(2.0 * v + 1).astype(complex) for v in inst.l[1:]))
    got, scale = instance_from_model(model)
    assert scale == pytest.approx(9.0)
    assert scale * classical_optimal(got).qfi == pytest.approx(classical_optimal(inst).qfi * 9.0, rel=1e-9)
    with pytest.raises(ValueError):
        instance_from_model(JumpModel((np.array([[0, 1], [0, 0]], dtype=complex),)))


def test_support_length_scan_small():
    out = support_length_scan(8, 2, 10, seed=1)
    assert out["trials"] == 10
    assert sum(out["histogram"].values()) == 10
    assert out["fraction_expected"] == pytest.approx(1 - len(out["failures"]) / 10)
