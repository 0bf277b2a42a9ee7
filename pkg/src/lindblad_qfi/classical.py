"""Commuting (diagonal) jump operators: the classical closed-form optimum.

With all operators diagonal, the jump operators reduce to real vectors l_j
(zero-sum, orthonormal).  The gauge bound becomes a Chebyshev problem
min_c ||l_1 - c_0 1 - sum_i c_i l_i||_inf, solved here as a linear program.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .core import JumpModel

SUPPORT_BAND = 1e-6
REGULARITY_TOL = 1e-9


@dataclass(frozen=True)
class ClassicalInstance:
    """l[0] is the signal vector, l[1:] the noise vectors."""

    l: tuple

    def __post_init__(self):
        vecs = [np.asarray(v, dtype=float).ravel() for v in self.l]
        if not vecs:
            raise ValueError("need at least the signal vector")
        d = vecs[0].size
        if any(v.size != d for v in vecs):
            raise ValueError("all vectors must have the same length")
        mat = np.array(vecs)
        if np.abs(mat.sum(axis=1)).max() > 1e-10:
            raise ValueError("vectors must sum to zero")
        if np.abs(mat @ mat.T - np.eye(len(vecs))).max() > 1e-10:
            raise ValueError("vectors must be orthonormal")
        object.__setattr__(self, "l", tuple(vecs))

    @property
    def d(self) -> int:
        return self.l[0].size

    @property
    def n_noises(self) -> int:
        return len(self.l) - 1

    @property
    def signal(self) -> np.ndarray:
        return self.l[0]

    @property
    def noises(self) -> np.ndarray:
        return np.array(self.l[1:]).reshape(self.n_noises, self.d)

    def model(self, total_time: float = 1.0) -> JumpModel:
        """Diagonal JumpModel with L_j = diag(l_j)."""
        return JumpModel(
            signals=(np.diag(self.signal).astype(complex),),
            noises=tuple(np.diag(v).astype(complex) for v in self.l[1:]),
            total_time=total_time,
        )


@dataclass(frozen=True)
class ClassicalOptimum:
    p: np.ndarray
    qfi: float
    support: tuple
    gauge_value: float
    residual: np.ndarray


def random_classical_instance(d: int, n_noises: int, rng: np.random.Generator,
                              sampler: str = "normal") -> ClassicalInstance:
    """Random vectors (Gaussian or uniform on [-1, 1]) projected off the all-ones
    vector and orthonormalised in order, so leading subsets stay orthonormal."""
    if n_noises + 1 > d - 1:
        raise ValueError("need N + 1 <= d - 1 zero-sum orthonormal vectors")
    if sampler == "normal":
        x = rng.normal(size=(d, n_noises + 1))
    elif sampler == "uniform":
        x = rng.uniform(-1.0, 1.0, size=(d, n_noises + 1))
    else:
        raise ValueError(f"unknown sampler {sampler!r}")
    x -= x.mean(axis=0)
    q, _ = np.linalg.qr(x)
    q -= q.mean(axis=0)
    return ClassicalInstance(tuple(q.T))


def leading_subinstance(inst: ClassicalInstance, n_noises: int) -> ClassicalInstance:
    """Signal plus the first n_noises noise vectors."""
    return ClassicalInstance(inst.l[: n_noises + 1])


def random_regular_instance(d: int, n_noises: int, rng: np.random.Generator,
                            max_tries: int = 100, sampler: str = "normal") -> ClassicalInstance:
    for _ in range(max_tries):
        inst = random_classical_instance(d, n_noises, rng, sampler)
        if classical_regularity(inst):
            return inst
    raise RuntimeError("failed to draw a regular instance")


def instance_from_model(model: JumpModel, tol: float = 1e-10) -> tuple[ClassicalInstance, float]:
    """Diagonal, real one-signal model -> (instance, squared signal norm).

    Identity parts are removed, noises orthonormalised in order (dependent ones
    dropped) and the signal projected off them; its norm is returned separately
    so that QFI(model) = norm^2 * QFI(instance).  Raises ValueError when the
    model is not of that form or the signal lies in the noise span.
    """
    if model.n_signals != 1:
        raise ValueError("the classical route needs exactly one signal")
    vecs = []
    for op in (*model.signals, *model.noises):
        if np.abs(op - np.diag(np.diag(op))).max() > tol:
            raise ValueError("operators must be diagonal")
        v = np.diag(op)
        if np.abs(v.imag).max() > tol:
            raise ValueError("diagonal entries must be real")
        vecs.append(v.real - v.real.mean())
    basis: list[np.ndarray] = []
    for v in vecs[1:]:
        for b in basis:
            v = v - (b @ v) * b
        nrm = np.linalg.norm(v)
        if nrm > tol:
            basis.append(v / nrm)
    sig = vecs[0]
    for b in basis:
        sig = sig - (b @ sig) * b
    nrm = np.linalg.norm(sig)
    if nrm <= tol:
        raise ValueError("signal lies in the span of the identity and the noises")
    if len(basis) + 1 > model.dim - 1:
        raise ValueError("too many independent noises for the dimension")
    return ClassicalInstance((sig / nrm, *basis)), float(nrm**2)


def chebyshev_residual(inst: ClassicalInstance) -> tuple[np.ndarray, np.ndarray]:
    """min over (c_0, c_i) of ||l_1 - c_0 1 - sum_i c_i l_i||_inf via linprog.

    Variables (c_0..c_N, t); minimise t subject to |l_1 - B c| <= t.
    Returns (coefficients, residual a_min).
    """
    d = inst.d
    basis = np.column_stack([np.ones(d)] + list(inst.l[1:]))
    nb = basis.shape[1]
    cost = np.zeros(nb + 1)
    cost[-1] = 1.0
    ones = np.ones((d, 1))
    a_ub = np.vstack([np.hstack([-basis, -ones]), np.hstack([basis, -ones])])
    b_ub = np.concatenate([-inst.signal, inst.signal])
    bounds = [(None, None)] * nb + [(0, None)]
    res = scipy.optimize.linprog(cost, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"linear program failed: {res.message}")
    coef = res.x[:nb]
    return coef, inst.signal - basis @ coef


def projected_signal(inst: ClassicalInstance, support) -> np.ndarray:
    """l_1 restricted to the support with span{1, noises} (restricted) projected out."""
    idx = np.asarray(support, dtype=int)
    basis = np.column_stack([np.ones(idx.size)] + [v[idx] for v in inst.l[1:]])
    y = inst.signal[idx]
    coef = np.linalg.lstsq(basis, y, rcond=1e-12)[0]
    return y - basis @ coef


def classical_optimal(inst: ClassicalInstance, total_time: float = 1.0) -> ClassicalOptimum:
    """Optimal diagonal input distribution and QFI 4T ||l_perp||_2^4 / ||l_perp||_1^2."""
    _, a = chebyshev_residual(inst)
    amax = np.abs(a).max()
    support = tuple(int(i) for i in np.flatnonzero(np.abs(a) >= (1.0 - SUPPORT_BAND) * amax))
    lp = projected_signal(inst, support)
    p = np.zeros(inst.d)
    l1 = np.abs(lp).sum()
    if l1 <= 1e-14:
        p[list(support)] = 1.0 / len(support)
        qfi = 0.0
    else:
        p[list(support)] = np.abs(lp) / l1
        qfi = 4.0 * total_time * np.sum(lp**2) ** 2 / l1**2
    return ClassicalOptimum(
        p=p,
        qfi=float(qfi),
        support=support,
        gauge_value=float(4.0 * total_time * amax**2),
        residual=a,
    )


def classical_regularity(inst: ClassicalInstance, tol: float = REGULARITY_TOL) -> bool:
    """Every k-row subset (k = N + 1) of [1, l_2, ..., l_{N+1}] has rank k.

    Smaller subsets are then independent too, so only size N + 1 is checked.
    """
    if inst.n_noises == 0:
        return True
    if inst.d > 12:
        raise ValueError("exhaustive regularity check is limited to d <= 12")
    mat = np.column_stack([np.ones(inst.d)] + list(inst.l[1:]))
    k = mat.shape[1]
    for rows in itertools.combinations(range(inst.d), k):
        s = np.linalg.svd(mat[list(rows)], compute_uv=False)
        if s[-1] <= tol * max(s[0], 1.0):
            return False
    return True


def support_length_scan(d: int, n_noises: int, trials: int, seed: int = 0) -> dict:
    """Histogram of optimal support sizes over random regular instances."""
    ss = np.random.SeedSequence(seed)
    lengths = []
    failures = []
    for i, child in enumerate(ss.spawn(trials)):
        inst = random_regular_instance(d, n_noises, np.random.default_rng(child))
        n = len(classical_optimal(inst).support)
        lengths.append(n)
        if n != n_noises + 2:
            failures.append({"trial": i, "support_length": n})
    hist = Counter(lengths)
    return {
        "d": d,
        "n_noises": n_noises,
        "trials": trials,
        "histogram": dict(sorted(hist.items())),
        "fraction_expected": hist.get(n_noises + 2, 0) / trials,
        "failures": failures,
    }
