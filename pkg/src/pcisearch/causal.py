"""Predictive causal information over a sensitivity grid for the unidentifiable correlation.

Under joint normality of (Y0, Y1, S) every moment is identifiable from a
randomized trial except ``rho = corr(Y0, Y1)``.  For a predictor subset ``A``
with ``d = cov1S_A - cov0S_A`` the individual causal effect ``Delta = Y1 - Y0``
satisfies::

    E[Delta | S_A = s]   = (mu1 - mu0) + d' SigmaS_A^-1 (s - muS_A)
    Var(Delta)           = var1 + var0 - 2 rho sqrt(var0 var1)
    Var(Delta | S_A)     = Var(Delta) - d' SigmaS_A^-1 d

and the predictive causal information is the squared multiple correlation
``d' SigmaS_A^-1 d / Var(Delta)``.

Feasibility of a grid value uses the Schur complement of ``SigmaS_A`` in the
joint covariance: with ``G = [cov0S_A, cov1S_A]' SigmaS_A^-1 [cov0S_A, cov1S_A]``
the 2x2 complement is ``[[var0 - G00, rho*s - G01], [rho*s - G01, var1 - G11]]``
(``s = sqrt(var0 var1)``).  A value is feasible when the smallest eigenvalue of
that complement is at least ``-FEASIBILITY_TOLERANCE``, which reduces to a
closed interval in ``rho``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg

from .errors import DomainError, InfeasibleError
from .moments import MomentEstimates

FEASIBILITY_TOLERANCE = 1e-10
CLAMP_TOLERANCE = 1e-9
DEFAULT_RHO_STEP = 0.01


class Accuracy(str, enum.Enum):
    NEGLIGIBLE = "negligible"
    LOW = "low"
    MODERATE = "moderate"
    HIGH = "high"
    VERY_HIGH = "very_high"


def classify_accuracy(pci: float) -> Accuracy:
    """Map a PCI value to the five-level accuracy scale (upper bounds inclusive)."""
    if pci <= 0.3:
        return Accuracy.NEGLIGIBLE
    if pci <= 0.5:
        return Accuracy.LOW
    if pci <= 0.7:
        return Accuracy.MODERATE
    if pci <= 0.9:
        return Accuracy.HIGH
    return Accuracy.VERY_HIGH


def rho_grid(step: float = DEFAULT_RHO_STEP) -> np.ndarray:
    """Symmetric grid ``{k * step : |k * step| < 1}``; ``step=0.01`` gives -0.99..0.99."""
    if not 0 < step <= 0.5:
        raise ValueError(f"rho step must lie in (0, 0.5], got {step}")
    kmax = int(np.floor(1 / step))
    if np.round(kmax * step, 12) >= 1:
        kmax -= 1
    k = np.arange(-kmax, kmax + 1)
    return np.round(k * step, 12)


def check_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float).reshape(-1)
    if g.size == 0:
        raise ValueError("rho grid is empty")
    if np.any(np.diff(g) <= 0):
        raise ValueError("rho grid must be strictly increasing")
    if g[0] < -1 or g[-1] > 1:
        raise ValueError("rho grid values must lie in [-1, 1]")
    return g


def subset_indices(m: MomentEstimates, subset) -> np.ndarray:
    """Normalize a subset given as names or integer indices to sorted unique indices."""
    items = list(subset)
    if not items:
        raise DomainError("predictor subset must be non-empty")
    if all(isinstance(x, str) for x in items):
        idx = m.index_of(items)
    else:
        idx = [int(x) for x in items]
    idx = sorted(set(idx))
    if idx[0] < 0 or idx[-1] >= m.p:
        raise DomainError(f"subset indices {idx} out of range for p={m.p}")
    return np.array(idx, dtype=np.intp)


def subset_mask(indices) -> int:
    mask = 0
    for j in indices:
        mask |= 1 << int(j)
    return mask


def mask_indices(mask: int) -> list[int]:
    return [j for j in range(mask.bit_length()) if mask >> j & 1]


@dataclass(frozen=True)
class SubsetGeometry:
    """Per-subset quadratic forms, batched over ``N`` subsets of equal size."""

    g00: np.ndarray
    g11: np.ndarray
    g01: np.ndarray

    @property
    def explained(self) -> np.ndarray:
        return self.g00 + self.g11 - 2 * self.g01


def subset_geometry(m: MomentEstimates, idx: np.ndarray) -> SubsetGeometry:
    """Quadratic forms ``c_i' SigmaS_A^-1 c_j`` for a batch of subsets.

    ``idx`` has shape ``(N, k)``.  Every public PCI routine funnels through
    here, so batched and single-subset results are bit-identical.
    """
    idx = np.atleast_2d(idx)
    Sig = m.SigmaS[idx[:, :, None], idx[:, None, :]]
    C = np.stack([m.cov0S[idx], m.cov1S[idx]], axis=-1)
    L = np.linalg.cholesky(Sig)
    W = np.linalg.solve(L, C)
    G = np.einsum("nki,nkj->nij", W, W)
    return SubsetGeometry(G[:, 0, 0], G[:, 1, 1], G[:, 0, 1])


def _delta_variance(m: MomentEstimates, rho):
    return m.var1 + m.var0 - 2 * np.asarray(rho) * np.sqrt(m.var0 * m.var1)


def feasibility_mask(m: MomentEstimates, geo: SubsetGeometry, grid: np.ndarray) -> np.ndarray:
    """Boolean ``(N, len(grid))`` mask of feasible correlation values."""
    tol = FEASIBILITY_TOLERANCE
    a = m.var0 - geo.g00 + tol
    b = m.var1 - geo.g11 + tol
    s = np.sqrt(m.var0 * m.var1)
    off = grid[None, :] * s - geo.g01[:, None]
    ok = (a >= 0) & (b >= 0)
    return ok[:, None] & (off * off <= (a * b)[:, None])


def joint_covariance(m: MomentEstimates, subset, rho: float) -> np.ndarray:
    """The ``(k + 2)``-square covariance of ``(Y0, Y1, S_A)`` implied at ``rho``."""
    idx = subset_indices(m, subset)
    k = len(idx)
    M = np.empty((k + 2, k + 2))
    c01 = rho * np.sqrt(m.var0 * m.var1)
    M[0, 0], M[1, 1] = m.var0, m.var1
    M[0, 1] = M[1, 0] = c01
    M[0, 2:] = M[2:, 0] = m.cov0S[idx]
    M[1, 2:] = M[2:, 1] = m.cov1S[idx]
    M[2:, 2:] = m.SigmaS[np.ix_(idx, idx)]
    return M


@dataclass(frozen=True, eq=False)
class SensitivityGrid:
    """Grid of correlation values and the feasible ones for a single subset."""

    rho_values: np.ndarray
    feasible_mask: np.ndarray

    @property
    def feasible_rhos(self) -> np.ndarray:
        return self.rho_values[self.feasible_mask]

    @property
    def interval(self) -> tuple[float, float] | None:
        r = self.feasible_rhos
        return (float(r[0]), float(r[-1])) if r.size else None


def _infeasible(m, idx):
    eig = np.linalg.eigvalsh(joint_covariance(m, idx, 0.0))
    names = [m.predictor_names[j] for j in idx]
    return InfeasibleError(
        f"no feasible rho on the grid for subset {names}; "
        f"eigenvalues of the joint covariance at rho=0: {np.array2string(eig, precision=4)}",
        eigenvalues_at_zero=eig,
    )


def feasible_rhos(m: MomentEstimates, subset, grid=None) -> SensitivityGrid:
    """Mark each grid value feasible if the implied joint covariance is PSD (within tolerance)."""
    idx = subset_indices(m, subset)
    grid = rho_grid() if grid is None else check_grid(grid)
    mask = feasibility_mask(m, subset_geometry(m, idx[None, :]), grid)[0]
    if not mask.any():
        raise _infeasible(m, idx)
    return SensitivityGrid(grid, mask)


def _pci_values(explained, var_delta):
    """PCI with round-off clamping; returns values and the largest clamp applied."""
    pci = explained / var_delta
    excess = np.maximum(pci - 1, -pci)
    clipped = np.clip(pci, 0.0, 1.0)
    return clipped, excess


def compute_pci(m: MomentEstimates, subset, rho: float) -> float:
    """Predictive causal information of ``subset`` at a single feasible ``rho``."""
    idx = subset_indices(m, subset)
    if not -1 <= rho <= 1:
        raise DomainError(f"rho={rho} outside [-1, 1]")
    geo = subset_geometry(m, idx[None, :])
    if not feasibility_mask(m, geo, np.array([float(rho)]))[0, 0]:
        raise DomainError(f"rho={rho} is infeasible for this subset")
    vd = float(_delta_variance(m, rho))
    if vd <= 0:
        raise DomainError(f"Var(Delta) = {vd} is not positive at rho={rho}")
    pci, excess = _pci_values(geo.explained, vd)
    if excess[0] > CLAMP_TOLERANCE:
        raise DomainError(f"PCI out of [0, 1] by {excess[0]:.3g} at rho={rho}")
    return float(pci[0])


@dataclass(frozen=True, eq=False)
class PciProfile:
    """PCI of one predictor subset across its feasible correlation values.

    Infeasible subsets carry ``feasible=False``, empty arrays and NaN summaries.
    """

    mask: int
    indices: tuple[int, ...]
    names: tuple[str, ...]
    rho_values: np.ndarray
    pci_by_rho: np.ndarray
    pci_min: float
    pci_mean: float
    pci_max: float
    accuracy: Accuracy | None

    @property
    def size(self) -> int:
        return len(self.indices)

    @property
    def feasible(self) -> bool:
        return self.rho_values.size > 0

    @property
    def rho_interval(self) -> tuple[float, float] | None:
        if not self.feasible:
            return None
        return float(self.rho_values[0]), float(self.rho_values[-1])

    def summary(self) -> dict:
        return {
            "mask": self.mask,
            "size": self.size,
            "predictors": list(self.names),
            "feasible": self.feasible,
            "pci_min": self.pci_min if self.feasible else None,
            "pci_mean": self.pci_mean if self.feasible else None,
            "pci_max": self.pci_max if self.feasible else None,
            "accuracy": self.accuracy.value if self.accuracy else None,
            "rho_interval": list(self.rho_interval) if self.feasible else None,
        }


def profiles_for_batch(m: MomentEstimates, idx: np.ndarray, grid: np.ndarray) -> list[PciProfile]:
    """Score a batch of equal-size subsets (``idx`` shaped ``(N, k)``) over ``grid``."""
    geo = subset_geometry(m, idx)
    feas = feasibility_mask(m, geo, grid)
    vd = _delta_variance(m, grid)
    if np.any(feas & (vd <= 0)[None, :]):
        raise DomainError("non-positive Var(Delta) on a feasible rho")
    with np.errstate(divide="ignore", invalid="ignore"):
        pci, excess = _pci_values(geo.explained[:, None], vd[None, :])
    bad = feas & (excess > CLAMP_TOLERANCE)
    if bad.any():
        n, r = np.argwhere(bad)[0]
        raise DomainError(
            f"PCI out of [0, 1] by {excess[n, r]:.3g} at rho={grid[r]} "
            f"for subset {[m.predictor_names[j] for j in idx[n]]}")
    out = []
    for n in range(idx.shape[0]):
        ind = tuple(int(j) for j in idx[n])
        names = tuple(m.predictor_names[j] for j in ind)
        f = feas[n]
        vals = pci[n, f]
        if vals.size:
            lo, hi, mean = float(vals.min()), float(vals.max()), float(vals.sum() / vals.size)
            acc = classify_accuracy(mean)
        else:
            lo = hi = mean = float("nan")
            acc = None
        out.append(PciProfile(subset_mask(ind), ind, names, grid[f], vals, lo, mean, hi, acc))
    return out


def pci_profile(m: MomentEstimates, subset, grid=None) -> PciProfile:
    """PCI at every feasible grid value with min/mean/max and the accuracy class of the mean."""
    idx = subset_indices(m, subset)
    grid = rho_grid() if grid is None else check_grid(grid)
    prof = profiles_for_batch(m, idx[None, :], grid)[0]
    if not prof.feasible:
        raise _infeasible(m, idx)
    return prof


@dataclass(frozen=True, eq=False)
class ConditionalDelta:
    """Distribution of the individual causal effect given predictor values.

    ``mean_delta`` does not depend on ``rho``; ``sd_delta_given_s`` and
    ``var_delta`` are aligned with ``rho_values`` (the feasible grid values).
    """

    mean_delta: np.ndarray | float
    rho_values: np.ndarray
    var_delta: np.ndarray
    sd_delta_given_s: np.ndarray


@dataclass(frozen=True, eq=False)
class DeltaModel:
    """Regression of the causal effect on a predictor subset."""

    indices: np.ndarray
    intercept: float
    center: np.ndarray
    coef: np.ndarray
    explained: float

    def mean_delta(self, s):
        s = np.asarray(s, dtype=float)
        return self.intercept + (s - self.center) @ self.coef


def delta_model(m: MomentEstimates, subset) -> DeltaModel:
    idx = subset_indices(m, subset)
    geo = subset_geometry(m, idx[None, :])
    d = m.cov1S[idx] - m.cov0S[idx]
    coef = linalg.cho_solve(linalg.cho_factor(m.SigmaS[np.ix_(idx, idx)], lower=True), d)
    return DeltaModel(idx, m.mu1 - m.mu0, m.muS[idx].copy(), coef, float(geo.explained[0]))


def conditional_sd(m: MomentEstimates, model: DeltaModel, rho: np.ndarray):
    """Conditional variance of Delta and its square root at each ``rho``."""
    vd = _delta_variance(m, rho)
    cv = vd - model.explained
    floor = -CLAMP_TOLERANCE * np.maximum(vd, 1.0)
    if np.any(cv < floor):
        raise DomainError("negative conditional variance of Delta on a feasible rho")
    return vd, np.sqrt(np.maximum(cv, 0.0))


def conditional_delta(m: MomentEstimates, subset, s, grid=None) -> ConditionalDelta:
    """Mean and per-rho spread of ``Delta`` given ``S_A = s``.

    ``s`` holds the values for the subset's predictors in index order; a 2-D
    array scores several patients at once.
    """
    model = delta_model(m, subset)
    s = np.asarray(s, dtype=float)
    if s.shape[-1] != len(model.indices):
        raise DomainError(
            f"expected {len(model.indices)} predictor value(s), got {s.shape[-1]}")
    sens = feasible_rhos(m, model.indices, grid)
    r = sens.feasible_rhos
    vd, sd = conditional_sd(m, model, r)
    mean = model.mean_delta(s)
    if mean.ndim == 0:
        mean = float(mean)
    return ConditionalDelta(mean, r, vd, sd)
