"""Truncated single-mode bosonic models for stochastic waveform estimation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import JumpModel, MixedState, PureState, State
from ..fisher import qfi_one_noise

TAIL_TOL = 1e-8
TAIL_LEVELS = 4
SWE_TOL = 1e-8


def default_truncation(nbar: float) -> int:
    return int(max(40, math.ceil(8 * nbar)))


@dataclass(frozen=True)
class BosonicAlgebra:
    """a, a^dag, x = (a + a^dag)/sqrt2, p = (-i a + i a^dag)/sqrt2 and n = a^dag a on d_F levels."""

    d_F: int

    def __post_init__(self):
        if self.d_F < 2:
            raise ValueError("need at least two Fock levels")

    @property
    def a(self) -> np.ndarray:
        return np.diag(np.sqrt(np.arange(1, self.d_F)), 1).astype(complex)

    @property
    def adag(self) -> np.ndarray:
        return self.a.conj().T

    @property
    def x(self) -> np.ndarray:
        return (self.a + self.adag) / np.sqrt(2)

    @property
    def p(self) -> np.ndarray:
        return (-1j * self.a + 1j * self.adag) / np.sqrt(2)

    @property
    def n(self) -> np.ndarray:
        return self.adag @ self.a

    def quadrature(self, theta: float) -> np.ndarray:
        return np.cos(theta) * self.x + np.sin(theta) * self.p


def _populations(state: State) -> np.ndarray:
    if isinstance(state, PureState):
        psi = state.matrix()
        return np.sum(np.abs(psi) ** 2, axis=1)
    return np.real(np.diag(np.asarray(state.rho)))


def tail_mass(state: State, levels: int = TAIL_LEVELS) -> float:
    pops = _populations(state)
    return float(pops[-levels:].sum())


def required_truncation(state: State, tol: float = TAIL_TOL) -> int:
    """Smallest d_F (given the populations present) keeping the top TAIL_LEVELS below tol."""
    pops = _populations(state)
    nz = np.flatnonzero(pops > tol / 10)
    return int((nz[-1] + 1 if nz.size else 1) + TAIL_LEVELS)


def check_truncation(state: State, tol: float = TAIL_TOL) -> None:
    mass = tail_mass(state)
    if mass >= tol:
        raise ValueError(
            f"Fock tail mass {mass:.3g} in the top {TAIL_LEVELS} levels exceeds {tol:g}; "
            f"increase d_F (estimate: d_F >= {2 * required_truncation(state, tol)})"
        )


def _fock(n: int, d_F: int) -> np.ndarray:
    if not 0 <= n < d_F:
        raise ValueError(f"Fock level {n} outside the truncation d_F={d_F}")
    v = np.zeros(d_F, dtype=complex)
    v[n] = 1.0
    return v


def smsv_amplitudes(r: float, phi: float, d_F: int) -> np.ndarray:
    """(e^{i phi} tanh r)^k sqrt((2k)!) / (2^k k!) / sqrt(cosh r) on even levels."""
    v = np.zeros(d_F, dtype=complex)
    t = np.exp(1j * phi) * np.tanh(r)
    for k in range((d_F + 1) // 2):
        logc = 0.5 * math.lgamma(2 * k + 1) - k * math.log(2) - math.lgamma(k + 1)
        v[2 * k] = t**k * math.exp(logc)
    return v / np.sqrt(np.cosh(r))


def bosonic_states(kind: str, params: dict | None = None, d_F: int | None = None) -> State:
    """fock(n), smsv(nbar or r, phi), tmsv_reduced(nbar), binomial(nbar),
    superposition(nbar, nstar), coherent(alpha).

    binomial uses nstar = max(3, ceil(nbar)); tmsv_reduced returns the
    thermal reduced state of the two-mode squeezed vacuum.
    """
    params = dict(params or {})
    nbar = params.get("nbar")
    if d_F is None:
        ref = nbar if nbar is not None else params.get("n", abs(params.get("alpha", 0)) ** 2)
        d_F = default_truncation(float(ref or 0))
    if kind == "fock":
        n = params.get("n", nbar)
        if n is None or int(n) != n:
            raise ValueError("fock needs an integer n")
        state: State = PureState.from_vector(_fock(int(n), d_F))
    elif kind == "smsv":
        r = params.get("r")
        if r is None:
            r = math.asinh(math.sqrt(nbar))
        state = PureState.from_vector(smsv_amplitudes(r, params.get("phi", 0.0), d_F))
    elif kind == "tmsv_reduced":
        k = np.arange(d_F)
        nb = float(nbar)
        pops = nb**k / (nb + 1) ** (k + 1)
        state = MixedState.from_matrix(np.diag(pops / pops.sum()).astype(complex))
    elif kind in ("binomial", "superposition"):
        nstar = params.get("nstar", max(3, math.ceil(nbar)))
        if nbar > nstar:
            raise ValueError("need nbar <= nstar")
        v = math.sqrt(1 - nbar / nstar) * _fock(0, d_F) + math.sqrt(nbar / nstar) * _fock(int(nstar), d_F)
        state = PureState.from_vector(v)
    elif kind == "coherent":
        alpha = complex(params["alpha"])
        k = np.arange(d_F)
        logf = np.array([math.lgamma(i + 1) for i in k])
        amp = np.exp(-abs(alpha) ** 2 / 2 - 0.5 * logf) * alpha**k
        state = PureState.from_vector(amp)
    else:
        raise ValueError(f"unknown bosonic state kind {kind!r}")
    check_truncation(state)
    return state


def auto_truncation(kind: str, params: dict, start: int | None = None, max_dim: int = 2048) -> State:
    """Build a state, doubling d_F until the tail guard passes."""
    d = start
    if d is None:
        nbar = params.get("nbar", params.get("n", 0)) or 0
        d = default_truncation(float(nbar))
    while d <= max_dim:
        try:
            return bosonic_states(kind, params, d)
        except ValueError as err:
            if "tail mass" not in str(err):
                raise
            d *= 2
    raise ValueError(f"no truncation up to {max_dim} levels satisfies the tail guard")


def mode_moments(state: State) -> tuple[float, complex, complex]:
    """(nbar, <a>, <a^2>) with the truncation guard applied."""
    check_truncation(state)
    alg = BosonicAlgebra(state.system_dim)
    rho = np.asarray(state.reduced().rho)
    a = alg.a
    return (float(np.trace(rho @ alg.n).real), complex(np.trace(rho @ a)), complex(np.trace(rho @ a @ a)))


def bosonic_swe_qfi(state: State, noise: str = "loss", isotropic: bool = False,
                    total_time: float = 1.0) -> float:
    """Closed-form QFI from (nbar, <a>, <a^2>) for a quadrature signal with loss a or gain a^dag.

    loss: 2T (nbar + 1 - |<a>|^2 - |<a^2> - <a>^2|^2 / (nbar - |<a>|^2))
    gain: 2T (nbar - |<a>|^2 - |<a^2> - <a>^2|^2 / (nbar + 1 - |<a>|^2))
    isotropic (x and p signals) doubles the value.  A vanishing denominator
    means the noise image is parallel to the state and drops the last term.
    """
    nbar, a1, a2 = mode_moments(state)
    if noise == "loss":
        keep, drop_den = nbar + 1 - abs(a1) ** 2, nbar - abs(a1) ** 2
    elif noise == "gain":
        keep, drop_den = nbar - abs(a1) ** 2, nbar + 1 - abs(a1) ** 2
    else:
        raise ValueError(f"unknown noise {noise!r}; expected 'loss' or 'gain'")
    val = keep
    if drop_den > 1e-12 * max(1.0, nbar):
        val -= abs(a2 - a1**2) ** 2 / drop_den
    return 2.0 * total_time * val * (2.0 if isotropic else 1.0)


def bosonic_swe_model(noise: str = "loss", isotropic: bool = False, d_F: int = 60,
                      total_time: float = 1.0, signal: str = "x") -> JumpModel:
    """Signal x (and p if isotropic) with loss a or gain a^dag as the single noise.

    signal="orthogonal" uses a^dag/sqrt2 (loss) or a/sqrt2 (gain), the part of
    the quadrature that survives projection off the noise.
    """
    alg = BosonicAlgebra(d_F)
    if noise == "loss":
        nop, orth = alg.a, alg.adag / np.sqrt(2)
    elif noise == "gain":
        nop, orth = alg.adag, alg.a / np.sqrt(2)
    else:
        raise ValueError(f"unknown noise {noise!r}")
    if signal == "orthogonal":
        sigs = (orth,) if not isotropic else (orth, orth)
    elif signal == "x":
        sigs = (alg.x, alg.p) if isotropic else (alg.x,)
    else:
        raise ValueError(f"unknown signal {signal!r}")
    return JumpModel(sigs, (nop,), total_time=total_time)


def swe_optimality_check(state: State, tol: float = SWE_TOL) -> bool:
    """True iff <a> and <a^2> both vanish."""
    _, a1, a2 = mode_moments(state)
    return bool(abs(a1) < tol and abs(a2) < tol)


def quadrature_noise_qfi(state: State, noise_quadrature: str = "p", d_F: int | None = None,
                         total_time: float = 1.0) -> dict:
    """Signal x with a classical quadrature noise (p perpendicular, x parallel):
    one-noise QFI alongside the noiseless value 4T Var(x)."""
    check_truncation(state)
    d = state.system_dim if d_F is None else d_F
    alg = BosonicAlgebra(d)
    noise = alg.p if noise_quadrature == "p" else alg.x
    model = JumpModel((alg.x,), (noise,), total_time=total_time)
    rho = np.asarray(state.reduced().rho)
    mean = np.trace(rho @ alg.x).real
    var = np.trace(rho @ alg.x @ alg.x).real - mean**2
    return {"qfi": qfi_one_noise(state, model), "noiseless": 4.0 * total_time * var}


def smsv_x_variance(nbar: float) -> float:
    """nbar + 1/2 + sqrt(nbar (nbar + 1))."""
    return nbar + 0.5 + math.sqrt(nbar * (nbar + 1))
