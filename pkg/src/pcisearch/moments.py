"""Identifiable first and second moments of (Y0, Y1, S) from a randomized two-arm trial.

Only uncensored records enter the estimates: a censored time is not a draw of
the endpoint and the Gaussian model has no censoring mechanism.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dataset import Arm, Dataset
from .errors import InsufficientDataError, SingularityError

PD_TOLERANCE = 1e-10
MAX_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class MomentEstimates:
    mu0: float
    mu1: float
    var0: float
    var1: float
    muS: np.ndarray
    SigmaS: np.ndarray
    cov0S: np.ndarray
    cov1S: np.ndarray
    n0: int
    n1: int
    predictor_names: tuple[str, ...]

    def __post_init__(self):
        p = len(self.predictor_names)
        set_ = object.__setattr__
        for name in ("muS", "cov0S", "cov1S"):
            a = np.array(getattr(self, name), dtype=float).reshape(p)
            a.setflags(write=False)
            set_(self, name, a)
        S = np.array(self.SigmaS, dtype=float).reshape(p, p)
        S.setflags(write=False)
        set_(self, "SigmaS", S)
        set_(self, "predictor_names", tuple(self.predictor_names))
        for name in ("mu0", "mu1", "var0", "var1"):
            set_(self, name, float(getattr(self, name)))
        if not (self.var0 > 0 and self.var1 > 0):
            raise SingularityError("endpoint variance must be positive in both arms")
        if not np.array_equal(S, S.T):
            raise SingularityError("SigmaS must be symmetric")
        check_predictor_covariance(S, self.predictor_names)

    @property
    def p(self) -> int:
        return len(self.predictor_names)

    def to_dict(self) -> dict:
        return {
            "mu0": self.mu0,
            "mu1": self.mu1,
            "var0": self.var0,
            "var1": self.var1,
            "muS": self.muS.tolist(),
            "SigmaS": self.SigmaS.tolist(),
            "cov0S": self.cov0S.tolist(),
            "cov1S": self.cov1S.tolist(),
            "n0": int(self.n0),
            "n1": int(self.n1),
            "predictor_names": list(self.predictor_names),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MomentEstimates":
        return cls(
            d["mu0"], d["mu1"], d["var0"], d["var1"], d["muS"], d["SigmaS"],
            d["cov0S"], d["cov1S"], int(d["n0"]), int(d["n1"]), tuple(d["predictor_names"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "MomentEstimates":
        return cls.from_dict(json.loads(text))

    def index_of(self, names) -> list[int]:
        try:
            return [self.predictor_names.index(nm) for nm in names]
        except ValueError as exc:
            raise KeyError(f"unknown predictor in {list(names)}") from exc


def check_predictor_covariance(S: np.ndarray, names) -> None:
    """Raise :class:`SingularityError` if ``S`` is not comfortably positive definite."""
    w, v = np.linalg.eigh(S)
    lo, hi = w[0], w[-1]
    if lo > PD_TOLERANCE and hi / lo <= MAX_CONDITION:
        return
    # loadings of the weakest direction identify the collinear columns
    direction = np.abs(v[:, 0])
    offenders = [names[j] for j in np.flatnonzero(direction > 0.1 * direction.max())]
    cond = np.inf if lo <= 0 else hi / lo
    raise SingularityError(
        f"predictor covariance is singular (min eigenvalue {lo:.3g}, condition {cond:.3g}); "
        f"collinear columns: {', '.join(offenders)}",
        offenders,
    )


def estimate_moments(ds: Dataset) -> MomentEstimates:
    """Unbiased sample moments from the uncensored records of each arm.

    Endpoint variances and endpoint-predictor covariances are computed within
    each arm (denominator ``n_arm - 1``, centered on the arm's own means).
    ``SigmaS`` is pooled over arms after centering each arm on its own predictor
    means (denominator ``n0 + n1 - 2``); ``muS`` is the pooled mean.
    """
    p = ds.p
    parts = {}
    for arm in Arm:
        mask = (ds.arm == int(arm)) & ds.event
        k = int(mask.sum())
        if k < p + 2:
            raise InsufficientDataError(
                f"{arm.name.lower()} arm has {k} uncensored record(s); "
                f"at least p + 2 = {p + 2} are required")
        parts[arm] = (ds.endpoint[mask], ds.predictors[mask])

    out = {}
    scatter = np.zeros((p, p))
    for arm, (y, X) in parts.items():
        k = len(y)
        yc = y - y.mean()
        Xc = X - X.mean(axis=0)
        out[arm] = (y.mean(), yc @ yc / (k - 1), Xc.T @ yc / (k - 1), k)
        scatter += Xc.T @ Xc
    n0, n1 = out[Arm.CONTROL][3], out[Arm.TREATED][3]
    SigmaS = scatter / (n0 + n1 - 2)
    SigmaS = (SigmaS + SigmaS.T) / 2
    X_all = np.concatenate([parts[Arm.CONTROL][1], parts[Arm.TREATED][1]])

    return MomentEstimates(
        mu0=out[Arm.CONTROL][0],
        mu1=out[Arm.TREATED][0],
        var0=out[Arm.CONTROL][1],
        var1=out[Arm.TREATED][1],
        muS=X_all.mean(axis=0),
        SigmaS=SigmaS,
        cov0S=out[Arm.CONTROL][2],
        cov1S=out[Arm.TREATED][2],
        n0=n0,
        n1=n1,
        predictor_names=ds.predictor_names,
    )
