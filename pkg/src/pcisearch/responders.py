"""Probability of treatment success per patient and good / rare / bad responder classes."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .causal import conditional_sd, delta_model, feasible_rhos
from .dataset import Dataset
from .errors import DomainError
from .moments import MomentEstimates


class ResponderClass(str, enum.Enum):
    GOOD = "good"
    RARE = "rare"
    BAD = "bad"


@dataclass(frozen=True, eq=False)
class SuccessCurve:
    patient_id: str
    rho_values: np.ndarray
    prob_by_rho: np.ndarray
    classification: ResponderClass
    mean_delta: float

    def to_dict(self) -> dict:
        return {
            "id": self.patient_id,
            "class": self.classification.value,
            "mean_delta": self.mean_delta,
            "prob_min": float(self.prob_by_rho.min()),
            "prob_max": float(self.prob_by_rho.max()),
            "rho": self.rho_values.tolist(),
            "prob_by_rho": self.prob_by_rho.tolist(),
        }


def _probabilities(mean, sd):
    """Gaussian success probability; a zero spread gives 1, 0.5 or 0 by the sign of ``mean``."""
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        prob = ndtr(mean / sd)
    degenerate = np.broadcast_to(sd == 0, prob.shape)
    if degenerate.any():
        limit = np.broadcast_to(0.5 * (1 + np.sign(mean)), prob.shape)
        prob = np.where(degenerate, limit, prob)
    return prob


def success_probability(m: MomentEstimates, subset, s, rho: float) -> float:
    """P(Delta > 0 | S_A = s) at a single feasible ``rho``."""
    model = delta_model(m, subset)
    sens = feasible_rhos(m, model.indices, np.array([float(rho)]))
    _, sd = conditional_sd(m, model, sens.feasible_rhos)
    return float(_probabilities(model.mean_delta(s), sd[0]))


def classify(curve) -> ResponderClass:
    """Good if every probability exceeds 0.5, bad if every one is below, rare otherwise."""
    probs = np.asarray(getattr(curve, "prob_by_rho", curve), dtype=float)
    if probs.size == 0:
        raise DomainError("cannot classify an empty success curve")
    if np.all(probs > 0.5):
        return ResponderClass.GOOD
    if np.all(probs < 0.5):
        return ResponderClass.BAD
    return ResponderClass.RARE


def success_curves(m: MomentEstimates, subset, s, ids, grid=None) -> list[SuccessCurve]:
    """Success curves for the rows of ``s`` (values of the subset's predictors, in index order)."""
    model = delta_model(m, subset)
    s = np.atleast_2d(np.asarray(s, dtype=float))
    if s.shape[1] != len(model.indices):
        raise DomainError(f"expected {len(model.indices)} predictor column(s), got {s.shape[1]}")
    rhos = feasible_rhos(m, model.indices, grid).feasible_rhos
    _, sd = conditional_sd(m, model, rhos)
    mean = model.mean_delta(s)
    probs = _probabilities(mean[:, None], sd[None, :])
    return [
        SuccessCurve(str(pid), rhos, probs[i], classify(probs[i]), float(mean[i]))
        for i, pid in enumerate(ids)
    ]


def score_cohort(m: MomentEstimates, subset, ds: Dataset, grid=None) -> list[SuccessCurve]:
    """One curve per record of ``ds``, in dataset order, regardless of arm."""
    names = [m.predictor_names[j] for j in delta_model(m, subset).indices]
    missing = [nm for nm in names if nm not in ds.predictor_names]
    if missing:
        raise DomainError(f"dataset lacks predictor(s) {missing}")
    cols = [ds.predictor_names.index(nm) for nm in names]
    return success_curves(m, names, ds.predictors[:, cols], ds.ids, grid)


def class_counts(curves) -> dict[str, int]:
    counts = {c.value: 0 for c in ResponderClass}
    for c in curves:
        counts[c.classification.value] += 1
    return counts
