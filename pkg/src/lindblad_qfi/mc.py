"""Monte Carlo measure-and-reset: outcome sampling, maximum likelihood for sqrt(gamma1)
and Cramer-Rao saturation statistics."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import JumpModel, PureState, State, image_basis
from .fisher import as_pure, cfi, measure_reset_probabilities, qfi_theorem1

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class TrajectoryConfig:
    """M shots per replication, R replications, one seed for everything.

    The measurement is the image basis of `state`; `basis_state`, if given,
    builds the projectors from a different state (a misspecified basis) while
    `state` is still the one prepared.
    """

    model: JumpModel
    state: State
    shots: int
    replications: int = 100
    seed: int = 0
    channel: str = "exact"
    basis_state: State | None = None
    upper_factor: float = 10.0
    tol: float = 1e-10

    def __post_init__(self):
        if self.shots < 1 or self.replications < 1:
            raise ValueError("shots and replications must be >= 1")
        if self.model.signal_rate <= 0:
            raise ValueError("Monte Carlo needs a finite signal rate")
        if self.channel not in ("exact", "step"):
            raise ValueError(f"unknown channel {self.channel!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        probs = self.measurement().probs
        if probs.min() < -1e-12:
            raise ValueError("outcome probabilities must be non-negative")

    @property
    def truth(self) -> float:
        return float(np.sqrt(self.model.signal_rate))

    def basis(self) -> np.ndarray | None:
        if self.basis_state is None:
            return None
        return image_basis(as_pure(self.basis_state), self.model).kets

    def measurement(self, sqrt_rate: float | None = None):
        model = self.model if sqrt_rate is None else self.model.with_(signal_rate=sqrt_rate**2)
        return measure_reset_probabilities(self.state, model, self.channel, self.basis())

    def with_(self, **kw) -> "TrajectoryConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class EstimationReport:
    estimates: np.ndarray
    truth: float
    rmse: float
    crb: float
    ratio: float
    ratio_stderr: float
    fisher_per_shot: float
    crb_mode: str
    degenerate: int = 0
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "estimates": [float(x) for x in self.estimates],
            "truth": self.truth,
            "rmse": self.rmse,
            "crb": self.crb,
            "ratio": self.ratio,
            "ratio_stderr": self.ratio_stderr,
            "fisher_per_shot": self.fisher_per_shot,
            "crb_mode": self.crb_mode,
            "degenerate": self.degenerate,
            "info": self.info,
        }


def replication_rng(seed: int, replication: int) -> np.random.Generator:
    """Counter-based Philox stream keyed by (seed, replication)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(replication)])))


def _clean_probs(p: np.ndarray) -> np.ndarray:
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    return p / p.sum()


def sample_outcomes(cfg: TrajectoryConfig, replication: int = 0, probs: np.ndarray | None = None) -> np.ndarray:
    """Multinomial outcome counts of M shots for one replication."""
    p = _clean_probs(cfg.measurement().probs if probs is None else probs)
    return replication_rng(cfg.seed, replication).multinomial(cfg.shots, p)


def log_likelihood(counts: np.ndarray, cfg: TrajectoryConfig, sqrt_rate: float) -> tuple[float, float, float]:
    """(log L, d log L / ds, expected information M F(s)) at s."""
    mm = cfg.measurement(sqrt_rate)
    p, dp = mm.probs, mm.dprobs
    used = counts > 0
    if np.any(p[used] <= 0):
        return -np.inf, 0.0, 0.0
    ll = float(np.sum(counts[used] * np.log(p[used])))
    score = float(np.sum(counts[used] * dp[used] / p[used]))
    # expected information over outcomes still possible at s; at s = 0 the
    # signal outcomes have p = 0 and carry no first-order information
    live = p > 0
    info = float(counts.sum() * np.sum(dp[live] ** 2 / p[live]))
    return ll, score, info


@dataclass(frozen=True)
class MLEResult:
    estimate: float
    degenerate: bool
    iterations: int


def mle_sqrt_gamma(counts: np.ndarray, cfg: TrajectoryConfig) -> MLEResult:
    """Maximise the multinomial log-likelihood over s in [0, upper_factor * truth].

    Golden-section search brackets the maximum; Fisher-scoring Newton steps
    then polish it to cfg.tol.  An estimate on the lower boundary (e.g. when no
    signal-sensitive outcome was observed) is returned as 0 with degenerate set.
    """
    counts = np.asarray(counts)
    lo, hi = 0.0, cfg.upper_factor * cfg.truth

    def f(s):
        return log_likelihood(counts, cfg, s)[0]

    a, b = lo, hi
    c1 = b - GOLDEN * (b - a)
    c2 = a + GOLDEN * (b - a)
    f1, f2 = f(c1), f(c2)
    it = 0
    while b - a > 1e-6 * cfg.truth and it < 200:
        if f1 >= f2:
            b, c2, f2 = c2, c1, f1
            c1 = b - GOLDEN * (b - a)
            f1 = f(c1)
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + GOLDEN * (b - a)
            f2 = f(c2)
        it += 1
    s = 0.5 * (a + b)
    if s <= 2e-6 * cfg.truth:
        ll0, score0, _ = log_likelihood(counts, cfg, 0.0)
        if score0 <= 0 or not np.isfinite(ll0):
            return MLEResult(0.0, True, it)
    for _ in range(50):
        _, score, info = log_likelihood(counts, cfg, s)
        if info <= 0:
            break
        step = score / info
        s_new = min(max(s + step, lo), hi)
        it += 1
        if abs(s_new - s) <= cfg.tol:
            s = s_new
            break
        s = s_new
    return MLEResult(float(s), bool(s <= 0.0), it)


def fisher_per_shot(cfg: TrajectoryConfig, mode: str = "theorem1") -> float:
    """Per-shot Fisher information for s: the optimal-control QFI scaled to one step t,
    or the CFI of the finite-rate outcome model."""
    if mode == "theorem1":
        model = cfg.model
        return qfi_theorem1(cfg.state, model) * model.step / model.total_time
    if mode == "cfi":
        mm = cfg.measurement()
        return cfi(np.clip(mm.probs, 0, None), mm.dprobs)
    raise ValueError(f"unknown CRB mode {mode!r}")


def _run_replication(cfg: TrajectoryConfig, probs: np.ndarray, rep: int) -> MLEResult:
    return mle_sqrt_gamma(sample_outcomes(cfg, rep, probs), cfg)


def run_replications(cfg: TrajectoryConfig, threads: int = 1) -> list[MLEResult]:
    """All replications; results are independent of the thread count."""
    probs = cfg.measurement().probs
    reps = range(cfg.replications)
    if threads <= 1:
        return [_run_replication(cfg, probs, r) for r in reps]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda r: _run_replication(cfg, probs, r), reps))


def crb_saturation(cfg: TrajectoryConfig, crb_mode: str = "theorem1", threads: int = 1) -> EstimationReport:
    """RMSE of the MLE over R replications against the Cramer-Rao bound 1/sqrt(M F).

    The ratio standard error uses the delta method on the mean squared error.
    """
    results = run_replications(cfg, threads)
    est = np.array([r.estimate for r in results])
    err2 = (est - cfg.truth) ** 2
    mse = float(err2.mean())
    rmse = float(np.sqrt(mse))
    fisher = fisher_per_shot(cfg, crb_mode)
    crb = float(1.0 / np.sqrt(cfg.shots * fisher)) if fisher > 0 else float("inf")
    se_mse = float(err2.std(ddof=1) / np.sqrt(len(err2))) if len(err2) > 1 else float("nan")
    se_rmse = se_mse / (2.0 * rmse) if rmse > 0 else float("nan")
    return EstimationReport(
        estimates=est,
        truth=cfg.truth,
        rmse=rmse,
        crb=crb,
        ratio=rmse / crb,
        ratio_stderr=se_rmse / crb,
        fisher_per_shot=float(fisher),
        crb_mode=crb_mode,
        degenerate=int(sum(r.degenerate for r in results)),
        info={"shots": cfg.shots, "replications": cfg.replications, "seed": cfg.seed,
              "channel": cfg.channel, "cfi_per_shot": fisher_per_shot(cfg, "cfi")},
    )


def qubit_decay_config(gamma_t: float = 1e-3, shots: int = 10**6, replications: int = 100,
                       seed: int = 0, channel: str = "exact") -> TrajectoryConfig:
    """Noiseless qubit decay sigma_minus from |up>, step t = 1e-3, signal rate gamma_t / t."""
    t = 1e-3
    model = JumpModel((np.array([[0, 0], [1, 0]], dtype=complex),), signal_rate=gamma_t / t,
                      total_time=1.0, step=t)
    return TrajectoryConfig(model, PureState.from_vector([1.0, 0.0]), shots, replications, seed, channel)


def herm_herm_config(gamma_t: float = 1e-3, noise_t: float = 1e-3, shots: int = 10**6,
                     replications: int = 100, seed: int = 0, channel: str = "exact") -> TrajectoryConfig:
    """Signal sigma_z/sqrt2, noise sigma_x/sqrt2, equator state |+> (noise eigenstate)."""
    t = 1e-3
    sz = np.diag([1.0, -1.0]).astype(complex) / np.sqrt(2)
    sx = np.array([[0, 1], [1, 0]], dtype=complex) / np.sqrt(2)
    model = JumpModel((sz,), (sx,), signal_rate=gamma_t / t, noise_rates=(noise_t / t,),
                      total_time=1.0, step=t)
    return TrajectoryConfig(model, PureState.from_vector([1.0, 1.0]), shots, replications, seed, channel)
