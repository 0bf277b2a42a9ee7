"""Short-time Lindblad channel, its Kraus form and an exact Liouvillian evolver."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from .core import JumpModel, MixedState, PureState, operator_norm


class ShortTimeWarning(UserWarning):
    """The step t is not small compared with the short-time bound."""


@dataclass(frozen=True)
class KrausSet:
    """Kraus operators of one short step and their derivatives w.r.t. sqrt(signal_rate)."""

    ops: tuple
    derivs: tuple

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ k.conj().T for k in self.ops)

    def completeness_error(self) -> float:
        d = self.ops[0].shape[0]
        return operator_norm(sum(k.conj().T @ k for k in self.ops) - np.eye(d))


def _rated_ops(model: JumpModel) -> list[tuple[float, np.ndarray]]:
    out = [(model.signal_rate, s) for s in model.signals]
    out += list(zip(model.noise_rates, model.noises))
    return out


def dissipator(op: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """L rho L^dag - {L^dag L, rho}/2."""
    ldl = op.conj().T @ op
    return op @ rho @ op.conj().T - 0.5 * (ldl @ rho + rho @ ldl)


def generator(rho: np.ndarray, model: JumpModel) -> np.ndarray:
    """sum_j gamma_j D[L_j](rho)."""
    out = np.zeros_like(rho, dtype=complex)
    for rate, op in _rated_ops(model):
        if rate:
            out += rate * dissipator(op, rho)
    return out


def _rho(state) -> np.ndarray:
    if isinstance(state, (MixedState, PureState)):
        return np.asarray(state.reduced().rho)
    return np.asarray(state, dtype=complex)


def lindblad_step(rho, model: JumpModel, check_time: bool = True) -> MixedState:
    """rho' = rho + t sum_j gamma_j D[L_j](rho), first order in the step."""
    r = _rho(rho)
    if check_time and (model.signal_rate > 0 or any(model.noise_rates)):
        bound = short_time_bound(r, model)
        if model.step > 0.1 * bound:
            warnings.warn(
                f"step {model.step:g} exceeds 0.1 x short-time bound {bound:g}",
                ShortTimeWarning,
                stacklevel=2,
            )
    out = r + model.step * generator(r, model)
    out = 0.5 * (out + out.conj().T)
    # positivity and unit trace only hold to O(t^2) here, so skip validation
    return MixedState.unchecked(out)


def kraus_short_time(model: JumpModel) -> KrausSet:
    """K0 = I - t/2 sum gamma L^dag L, K_j = sqrt(gamma_j t) L_j.

    Derivatives are taken w.r.t. s = sqrt(signal_rate): dK0 = -s t sum_s L^dag L,
    dK_j = sqrt(t) L_j for signals and 0 for noises.  At s = 0 this is the
    vanishing-signal pair used throughout.
    """
    d, t = model.dim, model.step
    s = np.sqrt(model.signal_rate)
    eye = np.eye(d, dtype=complex)
    k0 = eye.copy()
    for rate, op in _rated_ops(model):
        k0 -= 0.5 * t * rate * (op.conj().T @ op)
    sig_ldl = sum(op.conj().T @ op for op in model.signals)
    ops = [k0]
    derivs = [-s * t * sig_ldl]
    for op in model.signals:
        ops.append(np.sqrt(model.signal_rate * t) * op)
        derivs.append(np.sqrt(t) * op)
    for rate, op in zip(model.noise_rates, model.noises):
        ops.append(np.sqrt(rate * t) * op)
        derivs.append(np.zeros_like(op))
    return KrausSet(tuple(ops), tuple(derivs))


def _liouvillian_from_ops(rated: tuple) -> np.ndarray:
    # row-major vec: vec(A X B) = (A kron B^T) vec(X)
    d = rated[0][1].shape[0]
    eye = np.eye(d)
    sup = np.zeros((d * d, d * d), dtype=complex)
    for rate, op in rated:
        if not rate:
            continue
        ldl = op.conj().T @ op
        sup += rate * (np.kron(op, op.conj()) - 0.5 * np.kron(ldl, eye) - 0.5 * np.kron(eye, ldl.T))
    return sup


@lru_cache(maxsize=64)
def _cached_liouvillian(key: bytes, d: int, rates: tuple) -> np.ndarray:
    mats = np.frombuffer(key, dtype=complex).reshape(len(rates), d, d)
    out = _liouvillian_from_ops(tuple(zip(rates, mats)))
    out.setflags(write=False)
    return out


def liouvillian(model: JumpModel, signal_rate: float | None = None) -> np.ndarray:
    """Superoperator matrix acting on row-major vec(rho)."""
    d = model.dim
    if d * d > 4096:
        raise ValueError(f"dimension {d} too large for the exact evolver (d^2 > 4096)")
    rate1 = model.signal_rate if signal_rate is None else signal_rate
    rated = [(rate1, s) for s in model.signals] + list(zip(model.noise_rates, model.noises))
    rates = tuple(float(r) for r, _ in rated)
    key = np.ascontiguousarray(np.array([op for _, op in rated])).tobytes()
    return _cached_liouvillian(key, d, rates)


def signal_liouvillian(model: JumpModel) -> np.ndarray:
    """Signal part of the Liouvillian at unit rate."""
    return liouvillian(model.with_(noises=(), noise_rates=()), signal_rate=1.0)


def exact_evolve(rho, model: JumpModel, duration: float) -> MixedState:
    """exp(duration * Liouvillian) applied to rho (Pade scaling-and-squaring)."""
    r = _rho(rho)
    d = r.shape[0]
    if duration == 0:
        return MixedState.from_matrix(r)
    prop = scipy.linalg.expm(duration * liouvillian(model))
    out = (prop @ r.reshape(-1)).reshape(d, d)
    return MixedState.from_matrix(0.5 * (out + out.conj().T))


def short_time_bound(rho, model: JumpModel) -> float:
    """4 ||G(rho)|| / ||G(G(rho))|| with G the rated generator; inf if the denominator vanishes."""
    r = _rho(rho)
    if model.signal_rate == 0 and not any(model.noise_rates):
        raise ValueError("all rates are zero: the generator vanishes")
    g1 = generator(r, model)
    g2 = generator(g1, model)
    den = operator_norm(g2)
    if den < 1e-14:
        return float("inf")
    return 4.0 * operator_norm(g1) / den
