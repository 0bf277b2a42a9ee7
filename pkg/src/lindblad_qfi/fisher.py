"""Fisher-information evaluators.

The parameter is s = sqrt(signal_rate) throughout.  Per-step quantities are
multiplied by M = T / t to give totals over the total time T.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .channel import dissipator, liouvillian, signal_liouvillian
from .core import (
    JumpModel,
    MixedState,
    PureState,
    State,
    extend_model,
    hs_orthonormalize,
    image_basis,
    noisy_span,
    state_factor,
)

VAR_TOL = 1e-12


@dataclass(frozen=True)
class GaugeCoefficients:
    """c[k, 0] multiplies I and c[k, 1:] the noises, for signal k."""

    c: np.ndarray

    def __post_init__(self):
        c = np.atleast_2d(np.array(self.c, dtype=complex))
        if not np.all(np.isfinite(c)):
            raise ValueError("gauge coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    @classmethod
    def zeros(cls, model: JumpModel) -> "GaugeCoefficients":
        return cls(np.zeros((model.n_signals, model.n_noises + 1)))


@dataclass(frozen=True)
class MeasurementModel:
    """Projective measurement with outcome probabilities and d p / d s.

    limit_fisher holds the per-step CFI in the s -> 0 limit, where the ratio
    dp^2 / p is 0/0 on the signal outcomes and must be taken analytically.
    """

    projectors: tuple
    probs: np.ndarray
    dprobs: np.ndarray
    step: float
    sqrt_rate: float
    limit_fisher: float | None = None
    labels: tuple = field(default=())

    def fisher(self) -> float:
        """Per-step CFI w.r.t. s = sqrt(signal_rate)."""
        if self.limit_fisher is not None:
            return self.limit_fisher
        return cfi(self.probs, self.dprobs)

    def total_fisher(self, total_time: float) -> float:
        return self.fisher() * total_time / self.step

    def dprobs_rate(self) -> np.ndarray:
        """d p / d gamma1 from the chain rule d s / d gamma1 = 1 / (2 s)."""
        return self.dprobs / (2.0 * self.sqrt_rate)


def _reduced(state: State) -> np.ndarray:
    return np.asarray(state.reduced().rho)


def covariance(a: np.ndarray, b: np.ndarray, rho: np.ndarray) -> complex:
    """<A^dag B> - <A>^* <B>."""
    ea = np.trace(rho @ a)
    eb = np.trace(rho @ b)
    return complex(np.trace(rho @ a.conj().T @ b) - np.conj(ea) * eb)


def variance(a: np.ndarray, rho: np.ndarray) -> float:
    return covariance(a, a, rho).real


def qfi_sld(rho, drho) -> float:
    """SLD quantum Fisher information of the family (rho, d rho)."""
    r = _reduced(rho) if isinstance(rho, (PureState, MixedState)) else np.asarray(rho, dtype=complex)
    dr = np.asarray(drho, dtype=complex)
    if np.max(np.abs(dr - dr.conj().T), initial=0.0) > 1e-10:
        raise ValueError("drho must be Hermitian")
    w, v = np.linalg.eigh(0.5 * (r + r.conj().T))
    w = np.clip(w, 0.0, None)
    elems = v.conj().T @ dr @ v
    denom = w[:, None] + w[None, :]
    mask = denom >= 1e-12
    return float(np.sum(2.0 * np.abs(elems[mask]) ** 2 / denom[mask]))


def cfi(probs, dprobs) -> float:
    """sum dp^2 / p, skipping outcomes with p < 1e-14 and dp < 1e-10."""
    p = np.asarray(probs, dtype=float)
    dp = np.asarray(dprobs, dtype=float)
    if np.any(p < -1e-12):
        raise ValueError("probabilities must be non-negative")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
    null = p < 1e-14
    if np.any(np.abs(dp[null]) >= 1e-10):
        raise ValueError("nonzero derivative on a zero-probability outcome: invalid derivative model")
    return float(np.sum(dp[~null] ** 2 / p[~null]))


def theorem1_contributions(state: State, model: JumpModel) -> np.ndarray:
    """Per-signal 4 T <L_k^dag (I - Pi) L_k>, evaluated on vectorised images."""
    q = noisy_span(state, model)
    s = state_factor(state)
    out = []
    for op in model.signals:
        v = (op @ s).ravel()
        resid = v - q @ (q.conj().T @ v)
        out.append(np.vdot(resid, resid).real)
    return 4.0 * model.total_time * np.array(out)


def qfi_theorem1(state: State, model: JumpModel) -> float:
    """Optimal-control QFI of the vanishing signal for this input state."""
    return float(np.sum(theorem1_contributions(state, model)))


def qfi_noiseless(state: State, model: JumpModel) -> float:
    """4 T sum_j Var(L_j), ignoring any noises."""
    rho = _reduced(state)
    return 4.0 * model.total_time * sum(variance(op, rho) for op in model.signals)


def _var_floor(op: np.ndarray) -> float:
    return VAR_TOL * max(1.0, np.linalg.norm(op, 2) ** 2)


def qfi_one_noise(state: State, model: JumpModel) -> float:
    """4 T sum_j [Var(L_j) - |Cov(L_n, L_j)|^2 / Var(L_n)]."""
    if model.n_noises != 1:
        raise ValueError("qfi_one_noise needs exactly one noise operator")
    rho = _reduced(state)
    noise = model.noises[0]
    vn = variance(noise, rho)
    total = 0.0
    for op in model.signals:
        term = variance(op, rho)
        if vn >= _var_floor(noise):
            term -= abs(covariance(noise, op, rho)) ** 2 / vn
        total += term
    return 4.0 * model.total_time * total


def qfi_two_noise(state: State, model: JumpModel) -> float:
    """Two-noise closed form: remove the first noise direction, then the remainder of the second."""
    if model.n_noises != 2:
        raise ValueError("qfi_two_noise needs exactly two noise operators")
    rho = _reduced(state)
    n1, n2 = model.noises
    v1 = variance(n1, rho)
    v2 = variance(n2, rho)
    use1 = v1 >= _var_floor(n1)
    c12 = covariance(n1, n2, rho)
    c21 = np.conj(c12)
    xi = abs(c12) ** 2 / v1 if use1 else 0.0
    rem2 = v2 - xi
    use2 = rem2 >= _var_floor(n2)
    total = 0.0
    for op in model.signals:
        c1j = covariance(n1, op, rho)
        c2j = covariance(n2, op, rho)
        term = variance(op, rho)
        zeta = 0.0
        if use1:
            term -= abs(c1j) ** 2 / v1
            zeta = c21 * c1j / v1
        if use2:
            term -= abs(c2j - zeta) ** 2 / rem2
        total += term
    return 4.0 * model.total_time * total


def bell_state_qfi(model: JumpModel) -> float:
    """(4 T / d) sum_j tr(L_j^dag L_j) after projecting signals off span{I, noises}."""
    norm = hs_orthonormalize(model, warn=False)
    d = model.dim
    return 4.0 * model.total_time / d * sum(np.vdot(op, op).real for op in norm.signals)


def _coeff_array(model: JumpModel, c) -> np.ndarray:
    arr = c.c if isinstance(c, GaugeCoefficients) else np.atleast_2d(np.asarray(c, dtype=complex))
    if arr.shape != (model.n_signals, model.n_noises + 1):
        raise ValueError(f"gauge coefficients must have shape {(model.n_signals, model.n_noises + 1)}")
    return arr


def gauge_operators(model: JumpModel, c) -> list[np.ndarray]:
    """A_k = L_k - c_k . (I, noises)."""
    arr = _coeff_array(model, c)
    basis = np.array(model.gauge_basis())
    return [op - np.tensordot(arr[k], basis, axes=1) for k, op in enumerate(model.signals)]


def gauge_matrix(model: JumpModel, c) -> np.ndarray:
    """sum_k A_k^dag A_k."""
    ops = gauge_operators(model, c)
    out = sum(a.conj().T @ a for a in ops)
    return 0.5 * (out + out.conj().T)


def gauge_bound(model: JumpModel, c) -> float:
    """4 T || sum_k A_k^dag A_k ||, an upper bound on the QFI of every state."""
    return 4.0 * model.total_time * float(np.linalg.eigvalsh(gauge_matrix(model, c))[-1])


def delayed_strategy_qfi_qubit_decay(gamma1: float, t: float, T: float) -> float:
    """4 gamma1 t T / (exp(gamma1 t) - 1) for measure-and-reset with delay t."""
    x = gamma1 * t
    if x < 0:
        raise ValueError("gamma1 * t must be non-negative")
    if x < 1e-8:
        return 4.0 * T * (1.0 - x / 2.0 + x * x / 12.0)
    return 4.0 * T * x / np.expm1(x)


def as_pure(state: State) -> PureState:
    return state.purification() if isinstance(state, MixedState) else state


def measure_reset_probabilities(
    psi: State,
    model: JumpModel,
    channel: str = "step",
    basis: np.ndarray | None = None,
) -> MeasurementModel:
    """Outcome model of one measure-and-reset step.

    The measurement projects onto the image basis of psi (psi, orthogonalised
    noise images, orthogonalised signal images) plus one aggregate remainder
    outcome.  channel='step' uses the first-order channel and gives exact
    analytic derivatives; channel='exact' uses the Liouvillian exponential and
    its Frechet derivative.  basis overrides the measurement kets (rows must be
    orthonormal vectors on system (x) ancilla).
    """
    psi = as_pure(psi)
    da = psi.ancilla_dim
    full = extend_model(model, da)
    n = psi.amplitudes.size
    if basis is None:
        ob = image_basis(psi, model)
        kets = ob.kets
        labels = ob.labels
    else:
        kets = np.atleast_2d(np.asarray(basis, dtype=complex))
        labels = tuple(f"ket:{i}" for i in range(kets.shape[0]))
    gram = kets.conj() @ kets.T
    if np.max(np.abs(gram - np.eye(kets.shape[0]))) > 1e-9:
        raise ValueError("measurement kets must be orthonormal")
    remainder = np.eye(n) - kets.T @ kets.conj()
    projectors = tuple(np.outer(k, k.conj()) for k in kets) + (remainder,)
    labels = tuple(labels) + ("remainder",)

    rho0 = np.outer(psi.amplitudes, psi.amplitudes.conj())
    s = np.sqrt(full.signal_rate)
    t = full.step

    if channel == "step":
        rho1 = rho0.copy()
        for rate, op in zip(full.noise_rates, full.noises):
            rho1 += t * rate * dissipator(op, rho0)
        dsig = sum(dissipator(op, rho0) for op in full.signals)
        rho1 = rho1 + t * full.signal_rate * dsig
        # d p / d gamma1 is exact for the linear channel
        dp_rate = np.array([np.trace(p @ dsig).real * t for p in projectors])
        noise_only = rho1 - t * full.signal_rate * dsig
    elif channel == "exact":
        lv = liouvillian(full)
        lsig = signal_liouvillian(full)
        vec = rho0.reshape(-1)
        prop, dprop = scipy.linalg.expm_frechet(t * lv, t * lsig)
        rho1 = (prop @ vec).reshape(n, n)
        drho_rate = (dprop @ vec).reshape(n, n)
        dp_rate = np.array([np.trace(p @ drho_rate).real for p in projectors])
        noise_only = None
    else:
        raise ValueError(f"unknown channel {channel!r}")

    probs = np.array([np.trace(p @ rho1).real for p in projectors])
    probs[np.abs(probs) < 1e-15] = 0.0
    dprobs = 2.0 * s * dp_rate

    limit = None
    if full.signal_rate == 0:
        if noise_only is None:
            noise_probs = probs
        else:
            noise_probs = np.array([np.trace(p @ noise_only).real for p in projectors])
        # p = p_noise + gamma1 * w: dp^2/p -> 4 w on outcomes with p_noise = 0, else 0
        silent = noise_probs < 1e-14
        limit = float(4.0 * np.sum(np.clip(dp_rate[silent], 0.0, None)))
    return MeasurementModel(
        projectors=projectors,
        probs=probs,
        dprobs=dprobs,
        step=t,
        sqrt_rate=float(s),
        limit_fisher=limit,
        labels=labels,
    )


def outcome_probabilities(psi: State, model: JumpModel, sqrt_rate: float, channel: str = "exact",
                          basis: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Probabilities and d p / d s at a given s, for likelihood evaluation."""
    mm = measure_reset_probabilities(psi, model.with_(signal_rate=sqrt_rate**2), channel, basis)
    return mm.probs, mm.dprobs
