"""Multivariate predictors of therapeutic success from two-arm trials.

The pipeline estimates the identifiable moments of (Y0, Y1, S), scores every
predictor subset by its predictive causal information over a grid of the
unidentifiable correlation between potential outcomes, selects the most
parsimonious accurate subset, classifies patients as good, rare or bad
responders and audits those classes with Kaplan-Meier and log-rank analysis.
"""

__version__ = "0.1.0"

from .causal import (
    Accuracy,
    ConditionalDelta,
    PciProfile,
    SensitivityGrid,
    classify_accuracy,
    compute_pci,
    conditional_delta,
    feasible_rhos,
    pci_profile,
    rho_grid,
)
from .dataset import Arm, Dataset, EndpointTransform, PatientRecord, load_csv, validate
from .moments import MomentEstimates, estimate_moments
from .responders import ResponderClass, SuccessCurve, classify, score_cohort, success_probability
from .search import SearchResult, enumerate_and_score, select_parsimonious
from .simulate import SimulationSpec, simulate
from .survival import KmCurve, LogRankResult, km_estimate, log_rank, subgroup_audit

__all__ = [
    "Accuracy", "Arm", "ConditionalDelta", "Dataset", "EndpointTransform", "KmCurve",
    "LogRankResult", "MomentEstimates", "PatientRecord", "PciProfile", "ResponderClass",
    "SearchResult", "SensitivityGrid", "SimulationSpec", "SuccessCurve", "classify",
    "classify_accuracy", "compute_pci", "conditional_delta", "enumerate_and_score",
    "estimate_moments", "feasible_rhos", "km_estimate", "load_csv", "log_rank",
    "pci_profile", "rho_grid", "score_cohort", "select_parsimonious", "simulate",
    "subgroup_audit", "success_probability", "validate",
]
