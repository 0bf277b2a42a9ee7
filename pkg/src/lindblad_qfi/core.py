"""Dense linear-algebra primitives shared by every other module.

States, the jump-operator model, Hilbert-Schmidt normalisation of the
operators, Gram-Schmidt of the state images and the noisy-subspace projector.

Operators are always stored at system size.  A pure state may carry an
ancilla factor; operators act on it as ``L (x) I`` by reshaping the
amplitudes into a ``(system_dim, ancilla_dim)`` matrix.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np

RANK_TOL = 1e-10
GS_DROP_TOL = 1e-9


class SignalInNoiseSpanWarning(UserWarning):
    """A signal operator lies in span{I, noises}; its QFI contribution is zero."""


def as_cmatrix(m, name: str = "operator") -> np.ndarray:
    arr = np.array(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PureState:
    """Normalised ket on system (x) ancilla, ancilla factor = len / system_dim."""

    amplitudes: np.ndarray
    system_dim: int

    def __post_init__(self):
        amp = np.array(self.amplitudes, dtype=complex).ravel()
        if self.system_dim <= 0 or amp.size % self.system_dim:
            raise ValueError("system_dim must divide the state length")
        if not np.all(np.isfinite(amp)):
            raise ValueError("state has non-finite amplitudes")
        if abs(np.linalg.norm(amp) - 1.0) > 1e-12:
            raise ValueError(f"state norm {np.linalg.norm(amp)!r} differs from 1")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def from_vector(cls, vec, system_dim: int | None = None) -> "PureState":
        vec = np.asarray(vec, dtype=complex).ravel()
        return cls(vec / np.linalg.norm(vec), system_dim or vec.size)

    @property
    def ancilla_dim(self) -> int:
        return self.amplitudes.size // self.system_dim

    def matrix(self) -> np.ndarray:
        """Amplitudes as a (system_dim, ancilla_dim) matrix Psi, so rho_S = Psi Psi^dag."""
        return self.amplitudes.reshape(self.system_dim, self.ancilla_dim)

    def reduced(self) -> "MixedState":
        psi = self.matrix()
        rho = psi @ psi.conj().T
        return MixedState(0.5 * (rho + rho.conj().T))


@dataclass(frozen=True)
class MixedState:
    rho: np.ndarray

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("density matrix must be square")
        if np.max(np.abs(rho - rho.conj().T), initial=0.0) > 1e-12:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1.0) > 1e-12:
            raise ValueError(f"density matrix trace {np.trace(rho).real!r} differs from 1")
        if np.linalg.eigvalsh(rho).min() < -1e-12:
            raise ValueError("density matrix has negative eigenvalues")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def from_matrix(cls, rho) -> "MixedState":
        """Symmetrise and renormalise before validating."""
        rho = np.asarray(rho, dtype=complex)
        rho = 0.5 * (rho + rho.conj().T)
        return cls(rho / np.trace(rho).real)

    @classmethod
    def unchecked(cls, rho) -> "MixedState":
        """Wrap a matrix without validation (e.g. a first-order channel output)."""
        obj = object.__new__(cls)
        rho = np.array(rho, dtype=complex)
        rho.setflags(write=False)
        object.__setattr__(obj, "rho", rho)
        return obj

    @property
    def system_dim(self) -> int:
        return self.rho.shape[0]

    def reduced(self) -> "MixedState":
        return self

    def factor(self) -> np.ndarray:
        """A matrix S with S S^dag = rho, using only the nonzero eigenvalues."""
        w, v = np.linalg.eigh(self.rho)
        keep = w > 1e-15 * max(w.max(), 1e-300)
        return v[:, keep] * np.sqrt(w[keep])

    def purification(self) -> PureState:
        s = self.factor()
        d = self.system_dim
        psi = np.zeros((d, d), dtype=complex)
        psi[:, : s.shape[1]] = s
        return PureState.from_vector(psi.ravel(), d)


State = Union[PureState, MixedState]


@dataclass(frozen=True)
class JumpModel:
    """Signals share the rate signal_rate; each noise has its own rate."""

    signals: tuple
    noises: tuple = ()
    signal_rate: float = 0.0
    noise_rates: tuple | None = None
    total_time: float = 1.0
    step: float = 1e-3

    def __post_init__(self):
        sig = tuple(as_cmatrix(s, "signal") for s in self.signals)
        noi = tuple(as_cmatrix(n, "noise") for n in self.noises)
        if len(sig) < 1:
            raise ValueError("at least one signal operator is required")
        d = sig[0].shape[0]
        if any(op.shape != (d, d) for op in sig + noi):
            raise ValueError("all operators must share one dimension")
        rates = (1.0,) * len(noi) if self.noise_rates is None else tuple(float(r) for r in self.noise_rates)
        if len(rates) != len(noi):
            raise ValueError("noise_rates must match the number of noises")
        if self.signal_rate < 0 or any(r < 0 for r in rates):
            raise ValueError("rates must be non-negative")
        if self.total_time <= 0 or self.step <= 0:
            raise ValueError("total_time and step must be positive")
        object.__setattr__(self, "signals", sig)
        object.__setattr__(self, "noises", noi)
        object.__setattr__(self, "noise_rates", rates)
        object.__setattr__(self, "signal_rate", float(self.signal_rate))

    @property
    def dim(self) -> int:
        return self.signals[0].shape[0]

    @property
    def n_signals(self) -> int:
        return len(self.signals)

    @property
    def n_noises(self) -> int:
        return len(self.noises)

    def gauge_basis(self) -> list[np.ndarray]:
        """(I, noises): the operators a gauge vector c multiplies."""
        return [np.eye(self.dim, dtype=complex), *self.noises]

    def with_(self, **kw) -> "JumpModel":
        return replace(self, **kw)


@dataclass(frozen=True)
class OrthoBasis:
    """Gram-Schmidt basis of psi, its noise images and its signal images.

    kets[i] is the i-th surviving orthonormal vector; labels[i] names its source
    ('psi', 'noise:k', 'signal:k').  coeffs[j, i] = <ket_i | image_j>, where image
    0 is psi, images 1..N are noise images and N+1..N+K signal images.
    rank is the dimension of span{psi, noise images}.
    """

    kets: np.ndarray
    coeffs: np.ndarray
    rank: int
    labels: tuple
    system_dim: int
    images: np.ndarray = field(repr=False)

    def states(self) -> list[PureState]:
        return [PureState.from_vector(k, self.system_dim) for k in self.kets]

    def reconstruct(self) -> np.ndarray:
        return self.coeffs @ self.kets


def apply(op: np.ndarray, psi: PureState) -> np.ndarray:
    """(op (x) I_ancilla) |psi> as a flat vector."""
    return (op @ psi.matrix()).ravel()


def expectation(op: np.ndarray, state: State) -> complex:
    return complex(np.trace(state.reduced().rho @ op))


def state_factor(state: State) -> np.ndarray:
    """S with S S^dag = rho_S; operators act on images as L @ S."""
    if isinstance(state, PureState):
        return state.matrix()
    return state.factor()


def hs_inner(a: np.ndarray, b: np.ndarray) -> complex:
    return complex(np.vdot(a, b))


def operator_norm(m) -> float:
    """Largest singular value."""
    m = np.asarray(m, dtype=complex)
    if not np.all(np.isfinite(m)):
        raise ValueError("operator has non-finite entries")
    if m.size == 0:
        return 0.0
    return float(np.linalg.svd(m, compute_uv=False)[0])


def sorted_eigh(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs in descending order with a fixed phase per eigenvector.

    Each eigenvector is rotated so its first entry of largest magnitude (on a
    1e-12 grid) is real and positive, making output reproducible across runs.
    """
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    order = np.argsort(-w, kind="stable")
    w, v = w[order], v[:, order]
    for i in range(v.shape[1]):
        mags = np.round(np.abs(v[:, i]), 12)
        j = int(np.argmax(mags))
        v[:, i] *= np.exp(-1j * np.angle(v[j, i]))
    return w, v


def hs_orthonormalize(model: JumpModel, warn: bool = True) -> JumpModel:
    """Remove identity parts, orthonormalise noises, project signals off the noises.

    The output gives the same optimal-control QFI for every input state, but it is
    not the same physical dynamics: rates of dropped or rescaled noises are
    reset to 1 (the QFI does not depend on them) and the identity components
    that generate a Hamiltonian-free phase are discarded.  Signals keep their
    norm after projection and are not rescaled.  A signal that vanishes after
    projection is set to exactly zero and a SignalInNoiseSpanWarning is issued.
    """
    d = model.dim
    eye = np.eye(d, dtype=complex)

    def traceless(op):
        return op - np.trace(op) / d * eye

    basis: list[np.ndarray] = []
    for op in model.noises:
        v = traceless(op)
        scale = np.linalg.norm(v)
        ref = max(np.linalg.norm(op), 1e-300)
        for _ in range(2):
            for b in basis:
                v = v - hs_inner(b, v) * b
        nv = np.linalg.norm(v)
        if nv > RANK_TOL * ref and nv > 0 and scale > 0:
            basis.append(v / nv)

    signals = []
    for k, op in enumerate(model.signals):
        v = traceless(op)
        ref = max(np.linalg.norm(op), 1e-300)
        for _ in range(2):
            for b in basis:
                v = v - hs_inner(b, v) * b
        if np.linalg.norm(v) < RANK_TOL * ref:
            if warn:
                warnings.warn(
                    f"signal {k} lies in span{{I, noises}}; its QFI contribution is 0",
                    SignalInNoiseSpanWarning,
                    stacklevel=2,
                )
            v = np.zeros_like(v)
        signals.append(v)

    return replace(
        model,
        signals=tuple(signals),
        noises=tuple(basis),
        noise_rates=(1.0,) * len(basis),
    )


def image_basis(psi: PureState, model: JumpModel, rank_tol: float = GS_DROP_TOL) -> OrthoBasis:
    """Modified Gram-Schmidt (with one re-orthogonalisation pass) of the images.

    Order: psi, noise images, signal images.  Images whose residual norm falls
    below rank_tol times their own norm (or below rank_tol absolutely, for
    vanishing images) are dropped.
    """
    if psi.system_dim != model.dim:
        raise ValueError("state system dimension does not match the model")
    images = [psi.amplitudes]
    labels_src = ["psi"]
    for k, op in enumerate(model.noises):
        images.append(apply(op, psi))
        labels_src.append(f"noise:{k}")
    for k, op in enumerate(model.signals):
        images.append(apply(op, psi))
        labels_src.append(f"signal:{k}")
    images = np.array(images)

    kets: list[np.ndarray] = []
    labels: list[str] = []
    rank = 0
    for idx, img in enumerate(images):
        v = img.copy()
        for _ in range(2):
            for q in kets:
                v = v - np.vdot(q, v) * q
        nv = np.linalg.norm(v)
        if nv > rank_tol * max(np.linalg.norm(img), 1.0):
            kets.append(v / nv)
            labels.append(labels_src[idx])
            if idx <= model.n_noises:
                rank += 1
    kets_arr = np.array(kets)
    coeffs = images @ kets_arr.conj().T
    return OrthoBasis(
        kets=kets_arr,
        coeffs=coeffs,
        rank=rank,
        labels=tuple(labels),
        system_dim=psi.system_dim,
        images=images,
    )


def _column_span(cols: np.ndarray, norms_ref: Sequence[float]) -> np.ndarray:
    """Orthonormal basis (columns) for the span of the given columns.

    Columns are first rescaled to unit norm so that rescaling an operator does
    not move the rank decision; columns that vanish relative to their
    operator's scale are dropped.
    """
    keep = []
    for j in range(cols.shape[1]):
        n = np.linalg.norm(cols[:, j])
        if n > RANK_TOL * max(norms_ref[j], 1e-300):
            keep.append(cols[:, j] / n)
    if not keep:
        return np.zeros((cols.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(np.array(keep).T, full_matrices=False)
    r = int(np.sum(s > RANK_TOL * s[0]))
    return u[:, :r]


def noisy_span(state: State, model: JumpModel) -> np.ndarray:
    """Orthonormal columns spanning {B S} for B in (I, noises), vectorised.

    S is the state factor (Psi for a pure state, a square-root factor of rho
    otherwise), so inner products of columns equal tr(rho B_a^dag B_b).
    """
    s = state_factor(state)
    basis = model.gauge_basis()
    cols = np.array([(b @ s).ravel() for b in basis]).T
    refs = [operator_norm(b) for b in basis]
    return _column_span(cols, refs)


def noisy_projector(state: State, model: JumpModel) -> np.ndarray:
    """Orthogonal projector onto span{psi, L_n psi}.

    A pure state gives a projector on system (x) ancilla.  A mixed state is
    represented by its canonical purification vec(S) with S S^dag = rho, so
    the projector acts on a d * d space.  The pseudoinverse of the image Gram
    matrix is realised through an SVD of the images with relative cutoff 1e-10.
    """
    if isinstance(state, MixedState):
        state = state.purification()
    q = noisy_span(state, model)
    return q @ q.conj().T


def extend_operator(op: np.ndarray, ancilla_dim: int) -> np.ndarray:
    """op (x) I_ancilla as a dense matrix."""
    return np.kron(op, np.eye(ancilla_dim))


def extend_model(model: JumpModel, ancilla_dim: int) -> JumpModel:
    """Same model acting on system (x) ancilla."""
    if ancilla_dim == 1:
        return model
    return replace(
        model,
        signals=tuple(extend_operator(s, ancilla_dim) for s in model.signals),
        noises=tuple(extend_operator(n, ancilla_dim) for n in model.noises),
    )


def bell_state(d: int) -> PureState:
    """Maximally entangled (d x d) state sum_i |i,i> / sqrt(d)."""
    return PureState.from_vector(np.eye(d).ravel(), d)
