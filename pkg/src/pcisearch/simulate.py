"""Seeded joint-normal trial simulator used as a Monte-Carlo oracle.

Draws use numpy's ``Generator`` on the PCG64 bit generator, so a seed fixes
the output across platforms.  Per patient the generator is consumed in a fixed
order: the (Y0, Y1, S) block, arm coin flips, censoring flags, then censoring
fractions, independent of the censoring rate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .causal import compute_pci, feasible_rhos
from .dataset import Dataset, EndpointTransform, write_csv
from .errors import DataValidationError
from .moments import MomentEstimates

PSD_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class SimulationSpec:
    mu0: float
    mu1: float
    var0: float
    var1: float
    true_rho: float
    muS: np.ndarray
    SigmaS: np.ndarray
    cov0S: np.ndarray
    cov1S: np.ndarray
    n: int
    censoring_rate: float = 0.0
    seed: int = 0
    predictor_names: tuple[str, ...] | None = None
    transform: EndpointTransform = EndpointTransform.LOG

    def __post_init__(self):
        set_ = object.__setattr__
        p = len(np.atleast_1d(self.muS))
        for name in ("muS", "cov0S", "cov1S"):
            set_(self, name, np.array(getattr(self, name), dtype=float).reshape(p))
        set_(self, "SigmaS", np.array(self.SigmaS, dtype=float).reshape(p, p))
        if self.predictor_names is None:
            set_(self, "predictor_names", tuple(f"x{j + 1}" for j in range(p)))
        set_(self, "predictor_names", tuple(self.predictor_names))
        set_(self, "transform", EndpointTransform(self.transform))
        if len(self.predictor_names) != p:
            raise DataValidationError("predictor_names length does not match muS")
        if not 0 <= self.censoring_rate < 1:
            raise DataValidationError("censoring_rate must lie in [0, 1)")
        if not -1 <= self.true_rho <= 1:
            raise DataValidationError("true_rho must lie in [-1, 1]")
        if self.n < 1:
            raise DataValidationError("n must be positive")
        lo = np.linalg.eigvalsh(self.joint_covariance())[0]
        if lo < -PSD_TOLERANCE:
            raise DataValidationError(
                f"joint covariance is not PSD at true_rho={self.true_rho} (min eigenvalue {lo:.3g})")

    @property
    def p(self) -> int:
        return len(self.muS)

    def joint_covariance(self) -> np.ndarray:
        p = self.p
        M = np.empty((p + 2, p + 2))
        M[0, 0], M[1, 1] = self.var0, self.var1
        M[0, 1] = M[1, 0] = self.true_rho * np.sqrt(self.var0 * self.var1)
        M[0, 2:] = M[2:, 0] = self.cov0S
        M[1, 2:] = M[2:, 1] = self.cov1S
        M[2:, 2:] = self.SigmaS
        return M

    def true_moments(self) -> MomentEstimates:
        return MomentEstimates(
            self.mu0, self.mu1, self.var0, self.var1, self.muS, self.SigmaS,
            self.cov0S, self.cov1S, self.n, self.n, self.predictor_names,
        )

    def analytic_pci(self, subset=None) -> float:
        subset = range(self.p) if subset is None else subset
        return compute_pci(self.true_moments(), subset, self.true_rho)

    def to_dict(self) -> dict:
        return {
            "mu0": self.mu0, "mu1": self.mu1, "var0": self.var0, "var1": self.var1,
            "true_rho": self.true_rho,
            "muS": self.muS.tolist(), "SigmaS": self.SigmaS.tolist(),
            "cov0S": self.cov0S.tolist(), "cov1S": self.cov1S.tolist(),
            "n": self.n, "censoring_rate": self.censoring_rate, "seed": self.seed,
            "predictor_names": list(self.predictor_names),
            "transform": self.transform.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimulationSpec":
        keys = ("mu0", "mu1", "var0", "var1", "true_rho", "muS", "SigmaS", "cov0S", "cov1S", "n")
        opt = {k: d[k] for k in ("censoring_rate", "seed", "predictor_names", "transform") if k in d}
        return cls(*(d[k] for k in keys), **opt)


@dataclass(frozen=True, eq=False)
class SimulatedTrial:
    spec: SimulationSpec
    dataset: Dataset
    y0: np.ndarray
    y1: np.ndarray
    informative: tuple[str, ...] = field(default=())

    @property
    def delta(self) -> np.ndarray:
        return self.y1 - self.y0

    def sidecar(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "analytic_pci_full": self.spec.analytic_pci(),
            "patients": [
                {"id": pid, "y0": float(a), "y1": float(b), "delta": float(b - a)}
                for pid, a, b in zip(self.dataset.ids, self.y0, self.y1)
            ],
        }


def _matrix_root(M):
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(M)
        return v * np.sqrt(np.clip(w, 0, None))


def simulate(spec: SimulationSpec) -> SimulatedTrial:
    """Sample a randomized trial: both potential outcomes, a fair-coin arm, and uniform censoring."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    n, p = spec.n, spec.p
    mean = np.concatenate([[spec.mu0, spec.mu1], spec.muS])
    draws = mean + rng.standard_normal((n, p + 2)) @ _matrix_root(spec.joint_covariance()).T
    arm = rng.integers(0, 2, size=n)
    censored = rng.random(n) < spec.censoring_rate
    fraction = 1.0 - rng.random(n)

    y0, y1, S = draws[:, 0], draws[:, 1], draws[:, 2:]
    observed = np.where(arm == 1, y1, y0)
    t = spec.transform.inverse(observed)
    if not np.all(t > 0):
        raise DataValidationError(
            "simulated survival times must be positive; use the log transform or shift the means")
    t = np.where(censored, fraction * t, t)
    width = len(str(n))
    ids = tuple(f"P{i + 1:0{width}d}" for i in range(n))
    ds = Dataset(spec.predictor_names, ids, arm, t, ~censored, S, spec.transform)
    return SimulatedTrial(spec, ds, y0, y1)


def write_simulation(trial: SimulatedTrial, csv_path, sidecar_path=None) -> None:
    write_csv(trial.dataset, csv_path)
    if sidecar_path is not None:
        Path(sidecar_path).write_text(json.dumps(trial.sidecar(), indent=1) + "\n", encoding="utf-8")


def random_spec(rng: np.random.Generator, p: int, n: int, seed: int, margin: float = 0.5) -> SimulationSpec:
    """A random joint-normal spec whose ``true_rho`` sits well inside the feasible interval."""
    A = rng.normal(size=(p + 2, p + 2))
    M = A @ A.T + 0.5 * np.eye(p + 2)
    d = np.sqrt(np.diag(M))
    base = SimulationSpec(0.0, 0.0, M[0, 0], M[1, 1], M[0, 1] / (d[0] * d[1]),
                          np.zeros(p), M[2:, 2:], M[0, 2:], M[1, 2:], n, seed=seed)
    rho = base.true_rho
    # shrink toward the interval midpoint so estimation noise cannot push it out
    interval = feasible_rhos(base.true_moments(), range(p), np.linspace(-1, 1, 2001)).interval
    mid = 0.5 * (interval[0] + interval[1])
    rho = mid + (1 - margin) * (rho - mid)
    mu = rng.normal(size=p + 2)
    return SimulationSpec(mu[0], mu[1], M[0, 0], M[1, 1], float(rho), mu[2:], M[2:, 2:],
                          M[0, 2:], M[1, 2:], n, seed=seed)


def heterogeneous_trial_spec(
    seed: int,
    n: int = 200,
    n_informative: int = 5,
    n_noise: int = 8,
    effect: float = 0.6,
    control_sd: float = 0.1,
    treated_sd: float = 0.1,
    shift: float = 1.0,
    prognostic: float = 0.1,
    informative_corr: float = -0.1,
    censoring_rate: float = 0.1,
    residual_rho: float = 0.0,
) -> tuple[SimulationSpec, tuple[str, ...]]:
    """A trial with planted treatment-effect heterogeneity on the log-time scale.

    Predictors are standard normals; the informative ones share pairwise
    correlation ``informative_corr`` and the noise ones are independent.
    Control log-time is
    ``log(12) + gamma' S + e0`` and treated log-time is
    ``log(12) + shift * sd(beta' S) + (gamma + beta)' S + e1``, with residual sds
    ``control_sd`` and ``treated_sd`` and residual correlation ``residual_rho``.
    Each informative predictor carries effect loading ``beta_j = effect``;
    ``gamma`` puts alternating +/- ``prognostic`` loadings on the same
    predictors, orthogonal to ``beta``, so it shifts survival in both arms
    without entering the treatment effect.

    Returns the spec and the informative predictor names.
    """
    p = n_informative + n_noise
    names = tuple(f"inf{j + 1}" for j in range(n_informative)) + \
        tuple(f"noise{j + 1}" for j in range(n_noise))
    beta = np.zeros(p)
    beta[:n_informative] = effect
    gamma = np.zeros(p)
    pattern = np.array([(-1.0) ** j for j in range(n_informative)])
    if n_informative % 2:
        pattern[-1] = 0.0
    gamma[:n_informative] = prognostic * pattern
    Sigma = np.eye(p)
    block = Sigma[:n_informative, :n_informative]
    block[...] = informative_corr
    np.fill_diagonal(block, 1.0)
    mu0 = np.log(12.0)
    sd_effect = float(np.sqrt(beta @ Sigma @ beta))
    var0 = control_sd ** 2 + gamma @ Sigma @ gamma
    var1 = treated_sd ** 2 + (gamma + beta) @ Sigma @ (gamma + beta)
    cov01 = residual_rho * control_sd * treated_sd + gamma @ Sigma @ (gamma + beta)
    spec = SimulationSpec(
        mu0=mu0,
        mu1=mu0 + shift * sd_effect,
        var0=var0,
        var1=var1,
        true_rho=cov01 / np.sqrt(var0 * var1),
        muS=np.zeros(p),
        SigmaS=Sigma,
        cov0S=Sigma @ gamma,
        cov1S=Sigma @ (gamma + beta),
        n=n,
        censoring_rate=censoring_rate,
        seed=seed,
        predictor_names=names,
        transform=EndpointTransform.LOG,
    )
    return spec, names[:n_informative]
