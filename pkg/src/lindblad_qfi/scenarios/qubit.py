"""Single-qubit case analysis, the two-qubit parallel strategy and the strategy hierarchy."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.optimize

from ..core import JumpModel, MixedState, PureState
from ..fisher import qfi_one_noise, qfi_theorem1
from ..optimize import (
    OptimizationResult,
    minimize_gauge,
    optimal_state_search,
    result_from_state,
)

SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.T.copy()
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)
UP = np.array([1.0, 0.0], dtype=complex)
DOWN = np.array([0.0, 1.0], dtype=complex)

CASE_KINDS = ("herm_herm", "nonherm_herm", "herm_nonherm", "in_plane", "out_of_plane")
_DEFAULTS = {
    "herm_herm": {"theta": 0.0},
    "nonherm_herm": {"a": 1.0, "b": 0.0},
    "herm_nonherm": {"a": 0.0, "b": 1.0},
    "in_plane": {"theta1": np.pi / 8, "phi1": 0.0},
    "out_of_plane": {"theta1": np.pi / 8, "theta2": np.pi / 4, "phi1": 0.0, "phi2": 0.0},
}
HIERARCHY_SLACK = 1e-6


@dataclass(frozen=True)
class QubitCase:
    """One signal and one noise on a qubit, in the canonical parametrisations.

    herm_herm:     L1 = sz/sqrt2, L2 = (cos theta sx + sin theta sy)/sqrt2
    nonherm_herm:  L1 = a s+ + b s-, L2 = sz/sqrt2
    herm_nonherm:  L1 = sz/sqrt2, L2 = a s+ + b s-
    in_plane:      L1 = cos t1 s+ + sin t1 e^{i phi1} s-, L2 = sin t1 e^{-i phi1} s+ - cos t1 s-
    out_of_plane:  L1 as in_plane, L2 = cos t2 (in-plane L2) + sin t2 e^{i phi2} sz/sqrt2
    """

    kind: str
    params: dict = field(default_factory=dict)
    total_time: float = 1.0

    def __post_init__(self):
        if self.kind not in CASE_KINDS:
            raise ValueError(f"unknown qubit case {self.kind!r}; expected one of {CASE_KINDS}")
        merged = dict(_DEFAULTS[self.kind])
        unknown = set(self.params) - set(merged)
        if unknown:
            raise ValueError(f"unknown parameters {sorted(unknown)} for case {self.kind!r}")
        merged.update(self.params)
        if self.kind in ("nonherm_herm", "herm_nonherm"):
            a, b = complex(merged["a"]), complex(merged["b"])
            if abs(abs(a) ** 2 + abs(b) ** 2 - 1.0) > 1e-10:
                raise ValueError("need |a|^2 + |b|^2 = 1")
            merged["a"], merged["b"] = a, b
        object.__setattr__(self, "params", merged)

    def operators(self) -> tuple[np.ndarray, np.ndarray]:
        p = self.params
        if self.kind == "herm_herm":
            th = p["theta"]
            return SIGMA_Z / np.sqrt(2), (np.cos(th) * SIGMA_X + np.sin(th) * SIGMA_Y) / np.sqrt(2)
        if self.kind == "nonherm_herm":
            return p["a"] * SIGMA_PLUS + p["b"] * SIGMA_MINUS, SIGMA_Z / np.sqrt(2)
        if self.kind == "herm_nonherm":
            return SIGMA_Z / np.sqrt(2), p["a"] * SIGMA_PLUS + p["b"] * SIGMA_MINUS
        t1, f1 = p["theta1"], p["phi1"]
        sig = np.cos(t1) * SIGMA_PLUS + np.sin(t1) * np.exp(1j * f1) * SIGMA_MINUS
        flat = np.sin(t1) * np.exp(-1j * f1) * SIGMA_PLUS - np.cos(t1) * SIGMA_MINUS
        if self.kind == "in_plane":
            return sig, flat
        t2, f2 = p["theta2"], p["phi2"]
        return sig, np.cos(t2) * flat + np.sin(t2) * np.exp(1j * f2) * SIGMA_Z / np.sqrt(2)

    def model(self) -> JumpModel:
        sig, noise = self.operators()
        return JumpModel(signals=(sig,), noises=(noise,), total_time=self.total_time)

    def noiseless_model(self) -> JumpModel:
        return JumpModel(signals=(self.operators()[0],), total_time=self.total_time)


@dataclass(frozen=True)
class QubitStateParams:
    """rho = [[p, r e^{i phi}], [r e^{-i phi}, 1 - p]] with r^2 <= p (1 - p)."""

    p: float
    r: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if self.r < 0 or self.r**2 > self.p * (1 - self.p) + 1e-12:
            raise ValueError("need 0 <= r^2 <= p (1 - p)")

    @classmethod
    def pure(cls, p: float, phi: float = 0.0) -> "QubitStateParams":
        return cls(p, float(np.sqrt(max(p * (1 - p), 0.0))), phi)

    @property
    def is_pure(self) -> bool:
        return abs(self.r**2 - self.p * (1 - self.p)) <= 1e-12

    def rho(self) -> np.ndarray:
        off = self.r * np.exp(1j * self.phi)
        return np.array([[self.p, off], [np.conj(off), 1 - self.p]], dtype=complex)

    def state(self) -> MixedState:
        return MixedState.from_matrix(self.rho())

    def ket(self) -> np.ndarray:
        """Pure-state amplitudes sqrt(p)|up> + sqrt(1-p) e^{-i phi}|down>."""
        return np.array([np.sqrt(self.p), np.sqrt(1 - self.p) * np.exp(-1j * self.phi)], dtype=complex)


def qubit_state_qfi(case: QubitCase, params: QubitStateParams) -> float:
    """Optimal-control QFI of rho(p, r, phi) for the case's model (extended if mixed)."""
    return qfi_one_noise(params.state(), case.model())


def qubit_unextended_qfi(case: QubitCase, params: QubitStateParams) -> float:
    """QFI of the pure state with the given (p, phi); r is set to sqrt(p (1 - p))."""
    pure = QubitStateParams.pure(params.p, params.phi)
    return qfi_one_noise(PureState.from_vector(pure.ket()), case.model())


def in_plane_qfi_formula(theta1: float, params: QubitStateParams, total_time: float = 1.0) -> float:
    """Explicit rational QFI of rho(p, r, phi) for the in-plane case with phi1 = 0."""
    p, r, phi = params.p, params.r, params.phi
    num = 8.0 * total_time * ((1 - p) * p - r**2)
    den = 1 + (2 * p - 1) * np.cos(2 * theta1) - 2 * r**2 * (1 - np.sin(2 * theta1) * np.cos(2 * phi))
    if abs(den) < 1e-300:
        return 0.0
    return float(num / den)


def in_plane_optimum(theta1: float, total_time: float = 1.0) -> float:
    """4T / max_pm (cos t1 pm sin t1)^2."""
    c, s = np.cos(theta1), np.sin(theta1)
    return 4.0 * total_time / max((c + s) ** 2, (c - s) ** 2)


def noiseless_optimum_formula(case: QubitCase) -> float:
    """Best noiseless QFI of the signal alone (all case families)."""
    T = case.total_time
    if case.kind in ("herm_herm", "herm_nonherm"):
        return 2.0 * T
    if case.kind == "nonherm_herm":
        return 4.0 * T * max(abs(case.params["a"]) ** 2, abs(case.params["b"]) ** 2)
    t1 = case.params["theta1"]
    return 4.0 * T * max(np.cos(t1) ** 2, np.sin(t1) ** 2)


def herm_nonherm_eigenstates(a: complex, b: complex) -> list[np.ndarray]:
    """Eigenstates of a s+ + b s- in closed form (both signs)."""
    if abs(a) + abs(b) == 0:
        raise ValueError("a and b cannot both vanish")
    ph = np.exp(0.5j * (np.angle(b) - np.angle(a)))
    out = []
    for sign in (1.0, -1.0):
        v = np.array([np.sqrt(abs(a)), sign * np.sqrt(abs(b)) * ph], dtype=complex)
        out.append(v / np.sqrt(abs(a) + abs(b)))
    return out


def best_noise_eigenstate_qfi(case: QubitCase) -> tuple[float, np.ndarray]:
    """Best unextended value over noise eigenstates (the only candidates with nonzero QFI)."""
    model = case.model()
    _, vecs = np.linalg.eig(model.noises[0])
    best = (-1.0, None)
    for i in range(vecs.shape[1]):
        v = vecs[:, i] / np.linalg.norm(vecs[:, i])
        val = qfi_one_noise(PureState.from_vector(v), model)
        if val > best[0]:
            best = (val, v)
    return best


def _closed_form(case: QubitCase, mode: str):
    """(value, state) from the closed forms, or None where only numerics exist."""
    T = case.total_time
    p = case.params
    if case.kind == "herm_herm":
        th = p["theta"]
        return 2.0 * T, PureState.from_vector([1.0, np.exp(1j * th)])
    if case.kind == "nonherm_herm":
        a, b = p["a"], p["b"]
        return 4.0 * T * max(abs(a) ** 2, abs(b) ** 2), PureState.from_vector(DOWN if abs(a) >= abs(b) else UP)
    if case.kind == "herm_nonherm":
        a, b = p["a"], p["b"]
        if mode == "extended":
            return 2.0 * T, MixedState.from_matrix(np.eye(2) / 2)
        value = 4.0 * T * (1.0 - 1.0 / (1.0 + 2.0 * abs(a * b)))
        return value, PureState.from_vector(herm_nonherm_eigenstates(a, b)[0])
    if case.kind == "in_plane":
        _, vec = best_noise_eigenstate_qfi(case)
        return in_plane_optimum(p["theta1"], T), PureState.from_vector(vec)
    return None


def qubit_case_optimum(case: QubitCase, mode: str = "extended", seed: int = 0) -> OptimizationResult:
    """Optimal QFI and state for a qubit case; closed form where available, else numerics.

    info["regime"] is "unextended-optimal" when an unextended state reaches the
    extended optimum (within 1e-7 relative), otherwise "entangled-optimal".
    """
    if mode not in ("extended", "unextended"):
        raise ValueError(f"unknown mode {mode!r}")
    model = case.model()
    cf = _closed_form(case, mode)
    if cf is not None:
        value, state = cf
        res = result_from_state(model, state, value, info={"source": "closed form", "mode": mode})
    elif mode == "unextended":
        value, vec = best_noise_eigenstate_qfi(case)
        res = result_from_state(model, PureState.from_vector(vec), value,
                                info={"source": "noise-eigenstate evaluation", "mode": mode})
    else:
        res = optimal_state_search(model, "extended", seed=seed)
        res = replace(res, info={**res.info, "source": "numeric"})
    unext = best_noise_eigenstate_qfi(case)[0]
    ext = res.value if mode == "extended" else _extended_value(case, seed)
    regime = "unextended-optimal" if unext >= ext * (1 - 1e-7) - 1e-12 else "entangled-optimal"
    return replace(res, info={**res.info, "regime": regime})


def _extended_value(case: QubitCase, seed: int = 0) -> float:
    cf = _closed_form(case, "extended")
    if cf is not None:
        return cf[0]
    return optimal_state_search(case.model(), "extended", seed=seed).value


def extended_unextended_gap(case: QubitCase, seed: int = 0) -> float:
    """Relative gap (extended - unextended) / extended."""
    ext = _extended_value(case, seed)
    unext = best_noise_eigenstate_qfi(case)[0]
    return (ext - unext) / max(ext, 1e-300)


def out_of_plane_transition(theta2: float = np.pi / 4, phi1: float = 0.0, phi2: float = 0.0,
                            gap_tol: float = 1e-7, xtol: float = 1e-6, seed: int = 0,
                            total_time: float = 1.0) -> float:
    """theta1* in (0, pi/4) where the extended optimum starts to exceed the unextended one."""

    def gap(t1):
        case = QubitCase("out_of_plane", {"theta1": t1, "theta2": theta2, "phi1": phi1, "phi2": phi2},
                         total_time)
        return extended_unextended_gap(case, seed)

    lo, hi = 1e-3, np.pi / 4
    if gap(lo) > gap_tol:
        raise RuntimeError("gap already open at small theta1")
    if gap(hi) <= gap_tol:
        raise RuntimeError("no gap at theta1 = pi/4")
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if gap(mid) > gap_tol:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def parallel_two_qubit_model(case: QubitCase) -> JumpModel:
    """Two probes with local copies of the case's signal (K=2) and noise (N=2)."""
    sig, noise = case.operators()
    eye = np.eye(2)
    return JumpModel(
        signals=(np.kron(sig, eye), np.kron(eye, sig)),
        noises=(np.kron(noise, eye), np.kron(eye, noise)),
        total_time=case.total_time,
    )


def bell_states() -> list[np.ndarray]:
    s = 1 / np.sqrt(2)
    return [
        np.array([s, 0, 0, s], dtype=complex),
        np.array([s, 0, 0, -s], dtype=complex),
        np.array([0, s, s, 0], dtype=complex),
        np.array([0, s, -s, 0], dtype=complex),
    ]


def parallel_optimum(case: QubitCase, seed: int = 0) -> OptimizationResult:
    """Best unextended two-qubit measure-and-reset value; info["per_qubit"] = value / 2."""
    model = parallel_two_qubit_model(case)
    _, vecs = np.linalg.eig(case.operators()[1])
    eig = [vecs[:, i] / np.linalg.norm(vecs[:, i]) for i in range(vecs.shape[1])]
    starts = bell_states() + [np.kron(u, v) for u in eig for v in eig]
    res = optimal_state_search(model, "unextended", seed=seed, extra_starts=starts)
    return replace(res, info={**res.info, "per_qubit": res.value / 2})


def _noiseless_value(case: QubitCase, seed: int = 0) -> float:
    return minimize_gauge(case.noiseless_model(), seed=seed).value


PATTERNS = {
    "herm_herm": ("=", "=", "="),
    "nonherm_herm": ("=", "=", "="),
    "herm_nonherm": ("<=", "=", "="),
    "in_plane": ("=", "=", "<="),
    "out_of_plane": ("<=", "<=", "<="),
}


def hierarchy_report(case: QubitCase, seed: int = 0, slack: float = HIERARCHY_SLACK) -> dict:
    """unextended, parallel (per qubit), optimal and noiseless QFIs plus the expected chain check.

    Every value is computed numerically (noise-eigenstate evaluation for unextended,
    the two-qubit unextended search for parallel, gauge minimisation for the
    optimum and the noiseless bound).
    """
    unext = best_noise_eigenstate_qfi(case)[0]
    par = parallel_optimum(case, seed).info["per_qubit"]
    opt = minimize_gauge(case.model(), seed=seed).value
    noiseless = _noiseless_value(case, seed)
    values = {"unextended": unext, "parallel": par, "optimal": opt, "noiseless": noiseless}
    chain = [unext, par, opt, noiseless]
    tol = slack * max(1.0, noiseless)
    checks = []
    for rel, lo, hi in zip(PATTERNS[case.kind], chain[:-1], chain[1:]):
        checks.append(abs(hi - lo) <= tol if rel == "=" else lo <= hi + tol)
    return {"case": case.kind, "params": dict(case.params), "values": values,
            "pattern": PATTERNS[case.kind], "holds": bool(all(checks)), "checks": checks}


def out_of_plane_model_value(theta1: float, theta2: float, total_time: float = 1.0) -> dict:
    """Extended, unextended and noiseless values for one out-of-plane point (phi1 = phi2 = 0)."""
    case = QubitCase("out_of_plane", {"theta1": theta1, "theta2": theta2}, total_time)
    return {
        "qfi_unextended": best_noise_eigenstate_qfi(case)[0],
        "qfi_extended": _extended_value(case),
        "qfi_noiseless": noiseless_optimum_formula(case),
    }


def optimal_bloch_vector(case: QubitCase, seed: int = 0) -> np.ndarray:
    """Bloch vector (x, y, z) of the optimal reduced state."""
    rho = np.asarray(qubit_case_optimum(case, "extended", seed).state.rho)
    return np.array([2 * rho[0, 1].real, -2 * rho[0, 1].imag, (rho[0, 0] - rho[1, 1]).real])


def maximise_over_params(case: QubitCase, n_grid: int = 24) -> tuple[float, QubitStateParams]:
    """Brute-force grid plus Nelder-Mead over (p, r, phi): an independent check of the optimum."""
    best = (-1.0, None)
    for p in np.linspace(0, 1, n_grid + 1):
        for frac in (0.0, 0.5, 1.0):
            for phi in np.linspace(0, np.pi, 7):
                prm = QubitStateParams(p, frac * np.sqrt(p * (1 - p)), phi)
                v = qubit_state_qfi(case, prm)
                if v > best[0]:
                    best = (v, prm)

    def neg(x):
        p = float(np.clip(x[0], 0, 1))
        r = float(np.clip(x[1], 0, 1)) * np.sqrt(p * (1 - p))
        return -qubit_state_qfi(case, QubitStateParams(p, r, x[2]))

    b = best[1]
    frac0 = b.r / np.sqrt(b.p * (1 - b.p)) if 0 < b.p < 1 else 0.0
    res = scipy.optimize.minimize(neg, [b.p, frac0, b.phi], method="Nelder-Mead",
                                  options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 4000})
    if -res.fun > best[0]:
        p = float(np.clip(res.x[0], 0, 1))
        best = (-res.fun, QubitStateParams(p, float(np.clip(res.x[1], 0, 1)) * np.sqrt(p * (1 - p)), res.x[2]))
    return best


def theorem1_on_params(case: QubitCase, params: QubitStateParams) -> float:
    """Same as qubit_state_qfi but via the projector construction (independent route)."""
    return qfi_theorem1(params.state(), case.model())
