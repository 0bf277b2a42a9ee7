"""Figure data tables: each builder returns (columns, rows, description)."""

from __future__ import annotations

import math

import numpy as np

from .classical import classical_optimal, leading_subinstance, random_regular_instance
from .fisher import qfi_theorem1
from .optimize import optimal_state_search
from .scenarios.bosonic import (
    auto_truncation,
    bosonic_states,
    bosonic_swe_model,
    bosonic_swe_qfi,
    default_truncation,
    smsv_x_variance,
)
from .scenarios.qubit import (
    QubitCase,
    best_noise_eigenstate_qfi,
    noiseless_optimum_formula,
    parallel_optimum,
    parallel_two_qubit_model,
)

FIGURES = ("fig2", "fig3a", "fig3b", "fig3c", "fig4", "fig5")


def _theta_grid(points: int) -> np.ndarray:
    return np.linspace(0.0, np.pi / 2, points)


def fig2(seed: int = 0, d: int = 10, max_noises: int = 4, total_time: float = 1.0):
    """Signal, noises and optimal distributions for N = 0..max_noises on one instance."""
    rng = np.random.default_rng(seed)
    inst = random_regular_instance(d, max_noises, rng, sampler="uniform")
    dists = [classical_optimal(leading_subinstance(inst, n), total_time) for n in range(max_noises + 1)]
    cols = ["index", "signal"] + [f"noise_{j}" for j in range(1, max_noises + 1)]
    cols += [f"p_noises_{n}" for n in range(max_noises + 1)]
    rows = []
    for a in range(d):
        row = [a, inst.signal[a]] + [inst.l[j][a] for j in range(1, max_noises + 1)]
        row += [opt.p[a] for opt in dists]
        rows.append(row)
    desc = {
        "index": "coordinate alpha of the commuting eigenbasis",
        "signal": "signal vector l_1 (zero-sum, unit norm)",
        "support_lengths": [len(opt.support) for opt in dists],
        "qfi": [opt.qfi for opt in dists],
    }
    for j in range(1, max_noises + 1):
        desc[f"noise_{j}"] = f"noise vector {j}, orthonormal to the signal and earlier noises"
    for n in range(max_noises + 1):
        desc[f"p_noises_{n}"] = f"optimal input distribution given the signal and the first {n} noises"
    return cols, rows, desc


def _out_of_plane_row(theta1: float, theta2: float, seed: int, total_time: float):
    case = QubitCase("out_of_plane", {"theta1": theta1, "theta2": theta2}, total_time)
    ext = optimal_state_search(case.model(), "extended", seed=seed)
    unext, vec = best_noise_eigenstate_qfi(case)
    return case, ext, unext, vec


def fig3a(seed: int = 0, points: int = 41, total_time: float = 1.0):
    """Extended, unextended and noiseless QFI versus theta1 for theta2 in {0, pi/4}."""
    cols = ["theta1", "qfi_unextended", "qfi_extended", "qfi_noiseless", "theta2"]
    rows = []
    for theta2 in (0.0, np.pi / 4):
        for t1 in _theta_grid(points):
            case, ext, unext, _ = _out_of_plane_row(t1, theta2, seed, total_time)
            rows.append([t1, unext, ext.value, noiseless_optimum_formula(case), theta2])
    desc = {
        "theta1": "signal mixing angle (radians)",
        "qfi_unextended": "best unextended measure-and-reset QFI (noise eigenstates)",
        "qfi_extended": "optimal QFI with a noiseless ancilla",
        "qfi_noiseless": "optimal QFI without the noise operator",
        "theta2": "out-of-plane angle of the noise (0 = in-plane)",
    }
    return cols, rows, desc


def _entropy(weights: np.ndarray) -> float:
    w = weights[weights > 1e-15]
    return float(-np.sum(w * np.log(w)))


def fig3b(seed: int = 0, points: int = 21, theta2: float = np.pi / 4, total_time: float = 1.0):
    """Parallel two-qubit QFI per qubit: optimised entangled input and noise-eigenstate products."""
    cols = ["theta1", "qfi_per_qubit_parallel", "qfi_per_qubit_product", "qfi_extended",
            "entanglement_parallel"]
    rows = []
    for t1 in _theta_grid(points):
        case, ext, unext, _ = _out_of_plane_row(t1, theta2, seed, total_time)
        par = parallel_optimum(case, seed)
        psi = par.pure_state.matrix().reshape(2, 2)
        ent = _entropy(np.linalg.svd(psi, compute_uv=False) ** 2) / math.log(2)
        rows.append([t1, par.info["per_qubit"], unext, ext.value, ent])
    desc = {
        "theta1": "signal mixing angle (radians)",
        "qfi_per_qubit_parallel": "best unextended two-qubit QFI divided by 2",
        "qfi_per_qubit_product": "QFI per qubit of a product of noise eigenstates",
        "qfi_extended": "optimal single-qubit QFI with a noiseless ancilla",
        "entanglement_parallel": "entanglement entropy of the two-qubit optimum / ln 2",
        "theta2": theta2,
    }
    return cols, rows, desc


def fig3c(seed: int = 0, points: int = 41, theta2: float = np.pi / 4, total_time: float = 1.0):
    """Normalised entanglement entropy of the optimal extended state versus theta1."""
    cols = ["theta1", "entanglement_extended", "gap_extended_unextended"]
    rows = []
    for t1 in _theta_grid(points):
        _, ext, unext, _ = _out_of_plane_row(t1, theta2, seed, total_time)
        w = np.linalg.eigvalsh(np.asarray(ext.state.rho))
        rows.append([t1, _entropy(np.clip(w, 0, None)) / math.log(2), ext.value - unext])
    desc = {
        "theta1": "signal mixing angle (radians)",
        "entanglement_extended": "von Neumann entropy of rho_S for the optimal extended state / ln 2",
        "gap_extended_unextended": "optimal extended minus best unextended QFI",
        "theta2": theta2,
    }
    return cols, rows, desc


def fig4(seed: int = 0, points: int = 21, theta2: float = np.pi / 4, total_time: float = 1.0):
    """Bloch vectors of the optimal extended and unextended reduced states."""
    cols = ["theta1", "mode", "bloch_x", "bloch_y", "bloch_z", "bloch_length"]
    rows = []
    for t1 in np.linspace(0.0, np.pi / 2, points)[1:-1]:
        _, ext, _, vec = _out_of_plane_row(t1, theta2, seed, total_time)
        for mode, rho in (("extended", np.asarray(ext.state.rho)), ("unextended", np.outer(vec, vec.conj()))):
            x, y, z = 2 * rho[0, 1].real, -2 * rho[0, 1].imag, (rho[0, 0] - rho[1, 1]).real
            rows.append([t1, mode, x, y, z, math.sqrt(x * x + y * y + z * z)])
    desc = {
        "theta1": "signal mixing angle (radians), open interval (0, pi/2)",
        "mode": "extended (ancilla allowed) or unextended",
        "bloch_x": "tr(rho sigma_x)",
        "bloch_y": "tr(rho sigma_y)",
        "bloch_z": "tr(rho sigma_z)",
        "bloch_length": "1 for pure (unextended) states, < 1 when entangled with the ancilla",
        "theta2": theta2,
    }
    return cols, rows, desc


def _smsv_levels(nbar: float, tail: float = 1e-15) -> int:
    """Levels so the SMSV population ratio (nbar / (nbar + 1)) per two levels decays below tail."""
    return max(default_truncation(nbar), int(math.ceil(2 * math.log(tail) / math.log(nbar / (nbar + 1)))))


def fig5(seed: int = 0, nbars=None, total_time: float = 1.0):
    """Waveform-estimation QFI with loss versus mean occupation."""
    if nbars is None:
        nbars = np.arange(0.5, 10.01, 0.5)
    cols = ["nbar", "qfi_smsv", "qfi_fock", "qfi_gkp_bound_omitted", "qfi_controlled",
            "qfi_controlled_isotropic", "qfi_noiseless_smsv", "qfi_noiseless_fock"]
    rows = []
    for nb in nbars:
        nb = float(nb)
        smsv = bosonic_states("smsv", {"nbar": nb}, _smsv_levels(nb))
        q_smsv = bosonic_swe_qfi(smsv, "loss", total_time=total_time)
        if float(nb).is_integer():
            fock = auto_truncation("fock", {"n": int(nb)})
            q_fock = qfi_theorem1(fock, bosonic_swe_model("loss", False, fock.system_dim, total_time))
            q_fock_free = 4.0 * total_time * (nb + 0.5)
        else:
            q_fock = float("nan")
            q_fock_free = float("nan")
        opt = auto_truncation("binomial", {"nbar": nb})
        d = opt.system_dim
        q_ctrl = qfi_theorem1(opt, bosonic_swe_model("loss", False, d, total_time))
        q_iso = qfi_theorem1(opt, bosonic_swe_model("loss", True, d, total_time))
        rows.append([nb, q_smsv, q_fock, 1, q_ctrl, q_iso, 4.0 * total_time * smsv_x_variance(nb), q_fock_free])
    desc = {
        "nbar": "mean occupation of the input state",
        "qfi_smsv": "QFI with loss and control for a squeezed vacuum (vanishes)",
        "qfi_fock": "QFI with loss and control for the Fock state |nbar> (integer nbar only)",
        "qfi_gkp_bound_omitted": "flag = 1: the bound without control is not computed here",
        "qfi_controlled": "optimal controlled QFI with loss, 2(nbar + 1) T, binomial-style state",
        "qfi_controlled_isotropic": "same with both quadratures as signals, 4(nbar + 1) T",
        "qfi_noiseless_smsv": "noiseless QFI of the squeezed vacuum, 4 T Var(x)",
        "qfi_noiseless_fock": "noiseless QFI of the Fock state, 4 T (nbar + 1/2)",
    }
    return cols, rows, desc


BUILDERS = {"fig2": fig2, "fig3a": fig3a, "fig3b": fig3b, "fig3c": fig3c, "fig4": fig4, "fig5": fig5}


def build_figure(name: str, seed: int = 0, **kw):
    if name not in BUILDERS:
        raise ValueError(f"unknown figure {name!r}; expected one of {FIGURES}")
    return BUILDERS[name](seed=seed, **kw)


__all__ = ["FIGURES", "build_figure", "parallel_two_qubit_model"]
