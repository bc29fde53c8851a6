"""Kaplan-Meier curves, the two-group log-rank test and responder subgroup audits."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .dataset import Arm, Dataset
from .errors import DegenerateTestError, DomainError
from .responders import ResponderClass

logger = logging.getLogger(__name__)

LONG_TERM_MONTHS = 24.0


@dataclass(frozen=True, eq=False)
class KmCurve:
    """Right-continuous product-limit estimate; ``survival[i]`` holds on ``[event_times[i], event_times[i+1])``."""

    event_times: np.ndarray
    survival: np.ndarray
    at_risk: np.ndarray
    events: np.ndarray
    n: int

    def survival_at(self, t: float) -> float:
        i = np.searchsorted(self.event_times, t, side="right")
        return 1.0 if i == 0 else float(self.survival[i - 1])

    def median(self) -> float | None:
        below = np.flatnonzero(self.survival <= 0.5)
        return float(self.event_times[below[0]]) if below.size else None

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "event_times": self.event_times.tolist(),
            "survival": self.survival.tolist(),
            "at_risk": self.at_risk.tolist(),
            "events": self.events.tolist(),
            "median": self.median(),
        }


def _as_arrays(times, events):
    t = np.asarray(times, dtype=float).reshape(-1)
    e = np.asarray(events, dtype=bool).reshape(-1)
    if t.shape != e.shape:
        raise DomainError("times and events must have the same length")
    if t.size and not np.all(t > 0):
        raise DomainError("times must be positive")
    return t, e


def km_estimate(times, events) -> KmCurve:
    """Product-limit estimator.

    At a tied time, deaths are counted against the full risk set before any
    censorings leave it.

    Factors between which nobody is censored telescope, so each such run is
    evaluated as one ratio ``(n_last - d_last) / n_first``.  Without censoring
    the estimate is then exactly the empirical survival fraction.
    """
    t, e = _as_arrays(times, events)
    if t.size == 0:
        raise DomainError("Kaplan-Meier estimate of an empty sample")
    death_times, deaths = np.unique(t[e], return_counts=True)
    at_risk = t.size - np.searchsorted(np.sort(t), death_times, side="left")
    surv = np.empty(death_times.size)
    base, start = 1.0, 0
    for i in range(death_times.size):
        if i and at_risk[i] != at_risk[i - 1] - deaths[i - 1]:
            base *= (at_risk[i - 1] - deaths[i - 1]) / at_risk[start]
            start = i
        surv[i] = base * ((at_risk[i] - deaths[i]) / at_risk[start])
    return KmCurve(death_times, surv, at_risk.astype(int), deaths.astype(int), int(t.size))


@dataclass(frozen=True)
class LogRankResult:
    statistic: float
    p_value: float
    observed: tuple[float, float]
    expected: tuple[float, float]
    variance: float

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "observed": list(self.observed),
            "expected": list(self.expected),
            "variance": self.variance,
        }


def chi2_sf_1df(x: float) -> float:
    """Upper tail of chi-square with one degree of freedom, ``Q(1/2, x/2)``."""
    return float(special.gammaincc(0.5, 0.5 * x))


def log_rank(g1, g2) -> LogRankResult:
    """Unweighted log-rank test of two ``(times, events)`` samples.

    Sums observed-minus-expected deaths and the hypergeometric variance over
    the distinct death times of the pooled sample.  The score is averaged over
    both groups' (equal and opposite) O - E, so swapping the groups leaves the
    statistic bit-identical.
    """
    t1, e1 = _as_arrays(*g1)
    t2, e2 = _as_arrays(*g2)
    if t1.size == 0 or t2.size == 0:
        raise DomainError("log-rank test needs two non-empty groups")
    t = np.concatenate([t1, t2])
    e = np.concatenate([e1, e2])
    if not e.any():
        raise DegenerateTestError("no events in either group")
    death_times = np.unique(t[e])

    def risk_and_deaths(tt, ee):
        st = np.sort(tt)
        sd = np.sort(tt[ee])
        n = tt.size - np.searchsorted(st, death_times, side="left")
        d = np.searchsorted(sd, death_times, side="right") - np.searchsorted(sd, death_times, side="left")
        return n.astype(float), d.astype(float)

    n1, d1 = risk_and_deaths(t1, e1)
    n2, d2 = risk_and_deaths(t2, e2)
    n = n1 + n2
    d = d1 + d2
    exp1 = d * n1 / n
    exp2 = d * n2 / n
    with np.errstate(invalid="ignore", divide="ignore"):
        var = np.where(n > 1, n1 * n2 * d * (n - d) / (n * n * (n - 1)), 0.0)
    V = float(var.sum())
    if V <= 0:
        raise DegenerateTestError("log-rank variance is zero")
    O1, E1 = float(d1.sum()), float(exp1.sum())
    O2, E2 = float(d2.sum()), float(exp2.sum())
    score = 0.5 * ((O1 - E1) - (O2 - E2))
    stat = score * score / V
    return LogRankResult(stat, chi2_sf_1df(stat), (O1, O2), (E1, E2), V)


@dataclass
class SubgroupComparison:
    responder_class: ResponderClass
    n_control: int
    n_treated: int
    km_control: KmCurve | None = None
    km_treated: KmCurve | None = None
    logrank: LogRankResult | None = None
    skipped: str | None = None

    def to_dict(self) -> dict:
        out = {
            "class": self.responder_class.value,
            "n_control": self.n_control,
            "n_treated": self.n_treated,
            "skipped": self.skipped,
            "logrank": self.logrank.to_dict() if self.logrank else None,
        }
        for arm, km in (("control", self.km_control), ("treated", self.km_treated)):
            out[f"km_{arm}"] = km.to_dict() if km else None
            out[f"long_term_survival_{arm}"] = km.survival_at(LONG_TERM_MONTHS) if km else None
        return out


@dataclass
class SubgroupAudit:
    comparisons: dict[ResponderClass, SubgroupComparison]
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "long_term_months": LONG_TERM_MONTHS,
            "classes": [c.to_dict() for c in self.comparisons.values()],
            "warnings": list(self.warnings),
        }


def subgroup_audit(ds: Dataset, curves) -> SubgroupAudit:
    """Treated-versus-control survival within each predicted responder class.

    Good and bad classes get a log-rank test; the rare class is described by
    its Kaplan-Meier curves only.  Cells without patients (or without events)
    are skipped with a warning.
    """
    curves = list(curves)
    if len(curves) != ds.n or any(c.patient_id != i for c, i in zip(curves, ds.ids)):
        raise DomainError("success curves do not align with dataset records")
    labels = np.array([c.classification.value for c in curves])
    comparisons = {}
    notes = []
    for cls in (ResponderClass.GOOD, ResponderClass.BAD, ResponderClass.RARE):
        in_cls = labels == cls.value
        ctl = in_cls & (ds.arm == int(Arm.CONTROL))
        trt = in_cls & (ds.arm == int(Arm.TREATED))
        comp = SubgroupComparison(cls, int(ctl.sum()), int(trt.sum()))
        if ctl.any():
            comp.km_control = km_estimate(ds.time[ctl], ds.event[ctl])
        if trt.any():
            comp.km_treated = km_estimate(ds.time[trt], ds.event[trt])
        if cls is not ResponderClass.RARE:
            if not (ctl.any() and trt.any()):
                comp.skipped = "empty arm within class"
            else:
                try:
                    comp.logrank = log_rank((ds.time[trt], ds.event[trt]), (ds.time[ctl], ds.event[ctl]))
                except DegenerateTestError as exc:
                    comp.skipped = str(exc)
            if comp.skipped:
                msg = (f"{cls.value} responders: treated-vs-control comparison skipped "
                       f"({comp.skipped}; control={comp.n_control}, treated={comp.n_treated})")
                notes.append(msg)
                warnings.warn(msg, RuntimeWarning, stacklevel=2)
        comparisons[cls] = comp
    return SubgroupAudit(comparisons, notes)
