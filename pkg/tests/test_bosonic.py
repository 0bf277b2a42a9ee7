import math

import numpy as np
import pytest

from lindblad_qfi import qfi_theorem1
from lindblad_qfi.scenarios.bosonic import (
    BosonicAlgebra,
    auto_truncation,
    bosonic_states,
    bosonic_swe_model,
    bosonic_swe_qfi,
    check_truncation,
    default_truncation,
    mode_moments,
    quadrature_noise_qfi,
    smsv_x_variance,
    swe_optimality_check,
    tail_mass,
)


def _x_variance(state, d_F):
    alg = BosonicAlgebra(d_F)
    rho = np.asarray(state.reduced().rho)
    mean = np.trace(rho @ alg.x).real
    return np.trace(rho @ alg.x @ alg.x).real - mean**2


def test_default_truncation():
    assert default_truncation(1) == 40
    assert default_truncation(10) == 80


def test_canonical_commutator_below_cutoff():
    alg = BosonicAlgebra(30)
    comm = alg.x @ alg.p - alg.p @ alg.x
    assert np.allclose(comm[:-1, :-1], 1j * np.eye(29))


def test_fock_one_loss():
    state = bosonic_states("fock", {"n": 1}, 60)
    assert bosonic_swe_qfi(state, "loss") == pytest.approx(4.0, rel=1e-10)
    model = bosonic_swe_model("loss", d_F=60, signal="orthogonal")
    assert qfi_theorem1(state, model) == pytest.approx(4.0, rel=1e-8)
    assert qfi_theorem1(state, bosonic_swe_model("loss", d_F=60)) == pytest.approx(4.0, rel=1e-8)


@pytest.mark.parametrize("nbar", [0.5, 1.0, 2.0])
def test_smsv_loss_vanishes(nbar):
    state = bosonic_states("smsv", {"nbar": nbar}, 140)
    assert bosonic_swe_qfi(state, "loss") < 1e-8
    assert qfi_theorem1(state, bosonic_swe_model("loss", d_F=140)) < 1e-8


def test_binomial_superposition_non_integer_nbar():
    state = bosonic_states("binomial", {"nbar": 1.5, "nstar": 3}, 60)
    assert bosonic_swe_qfi(state, "loss") == pytest.approx(5.0, rel=1e-10)
    assert qfi_theorem1(state, bosonic_swe_model("loss", d_F=60)) == pytest.approx(5.0, rel=1e-8)


@pytest.mark.parametrize("kind,params", [
    ("fock", {"n": 2}),
    ("binomial", {"nbar": 1.5}),
    ("binomial", {"nbar": 2.0}),
    ("tmsv_reduced", {"nbar": 1.0}),
])
def test_loss_minus_gain_is_2T(kind, params):
    state = bosonic_states(kind, params, 60)
    assert swe_optimality_check(state)
    loss = bosonic_swe_qfi(state, "loss", total_time=1.7)
    gain = bosonic_swe_qfi(state, "gain", total_time=1.7)
    assert loss - gain == pytest.approx(2 * 1.7, abs=1e-8)
    assert qfi_theorem1(state, bosonic_swe_model("gain", d_F=60, total_time=1.7)) == pytest.approx(gain, rel=1e-6)


@pytest.mark.parametrize("noise", ["loss", "gain"])
def test_isotropic_doubles(noise):
    state = bosonic_states("fock", {"n": 3}, 60)
    single = bosonic_swe_qfi(state, noise)
    assert bosonic_swe_qfi(state, noise, isotropic=True) == pytest.approx(2 * single)
    model = bosonic_swe_model(noise, isotropic=True, d_F=60)
    assert qfi_theorem1(state, model) == pytest.approx(2 * single, rel=1e-8)


def test_closed_form_matches_theorem1_for_non_optimal_states():
    for kind, params in [("coherent", {"alpha": 0.7 + 0.2j}), ("superposition", {"nbar": 1.0, "nstar": 2})]:
        state = bosonic_states(kind, params, 60)
        for noise in ("loss", "gain"):
            direct = qfi_theorem1(state, bosonic_swe_model(noise, d_F=60))
            assert bosonic_swe_qfi(state, noise) == pytest.approx(direct, rel=1e-6, abs=1e-8)


def test_tmsv_reduced_moments_vanish():
    nbar, a1, a2 = mode_moments(bosonic_states("tmsv_reduced", {"nbar": 1.0}, 60))
    assert nbar == pytest.approx(1.0, abs=1e-8)
    assert a1 == 0 and a2 == 0


def test_optimality_check_cases():
    assert swe_optimality_check(bosonic_states("fock", {"n": 4}, 60))
    assert not swe_optimality_check(bosonic_states("coherent", {"alpha": 1.0}, 60))
    assert not swe_optimality_check(bosonic_states("superposition", {"nbar": 1.0, "nstar": 2}, 60))
    assert swe_optimality_check(bosonic_states("superposition", {"nbar": 1.0, "nstar": 3}, 60))


@pytest.mark.parametrize("n", [0, 1, 3, 7])
def test_fock_x_variance(n):
    state = bosonic_states("fock", {"n": n}, 60)
    assert _x_variance(state, 60) == pytest.approx(n + 0.5, abs=1e-12)


def test_smsv_x_variance_at_adequate_truncation():
    state = bosonic_states("smsv", {"nbar": 2.0}, 140)
    assert _x_variance(state, 140) == pytest.approx(2.5 + math.sqrt(6), abs=1e-8)
    assert smsv_x_variance(2.0) == pytest.approx(2.5 + math.sqrt(6))


def test_smsv_nbar2_at_60_levels_trips_guard():
    # the tail above level 56 carries about 1e-6 of the population
    with pytest.raises(ValueError, match="tail mass"):
        bosonic_states("smsv", {"nbar": 2.0}, 60)


def test_auto_truncation_grows_until_guard_passes():
    state = auto_truncation("smsv", {"nbar": 2.0}, start=60)
    assert state.system_dim == 120
    assert tail_mass(state) < 1e-8
    check_truncation(state)


def test_smsv_mean_photon_number():
    nbar, _, a2 = mode_moments(bosonic_states("smsv", {"nbar": 1.0}, 80))
    assert nbar == pytest.approx(1.0, abs=1e-8)
    assert abs(a2) ** 2 == pytest.approx(nbar * (nbar + 1), abs=1e-7)


def test_unknown_kind_and_noise():
    with pytest.raises(ValueError):
        bosonic_states("cat", {"nbar": 1.0})
    with pytest.raises(ValueError):
        bosonic_swe_qfi(bosonic_states("fock", {"n": 1}, 40), "dephasing")
    with pytest.raises(ValueError):
        bosonic_states("fock", {"n": 1.5}, 40)


def test_perpendicular_quadrature_noise_on_smsv():
    # a SMSV is annihilated by (cosh r) a + (sinh r) a^dag, so x psi and p psi are
    # both parallel to a^dag psi and the p-noise image removes the whole signal;
    # at 60 levels the cut top level leaves a residue of about 4e-7
    state = bosonic_states("smsv", {"nbar": 1.0}, 100)
    out = quadrature_noise_qfi(state, "p")
    assert out["noiseless"] == pytest.approx(4 * smsv_x_variance(1.0), rel=1e-8)
    assert out["qfi"] < 1e-8
    coarse = quadrature_noise_qfi(bosonic_states("smsv", {"nbar": 1.0}, 60), "p")
    assert coarse["qfi"] < 1e-6 * coarse["noiseless"]


def test_parallel_quadrature_noise_vanishes():
    for kind, params in [("smsv", {"nbar": 1.0}), ("fock", {"n": 2})]:
        assert quadrature_noise_qfi(bosonic_states(kind, params, 60), "x")["qfi"] < 1e-8


def test_perpendicular_noise_on_fock_state():
    # x|n> and p|n> are independent, so only the part of x psi along p psi is lost
    out = quadrature_noise_qfi(bosonic_states("fock", {"n": 2}, 60), "p")
    assert 0 < out["qfi"] < out["noiseless"]
