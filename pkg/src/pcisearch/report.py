"""Report documents, model files and the three figure analogues.

Reports are plain JSON; floats are written with Python's shortest round-trip
representation, so reading a report back reproduces every value exactly.
"""

from __future__ import annotations

import json
from importlib import resources

import numpy as np

from . import __version__
from .causal import rho_grid
from .dataset import Arm, Dataset, EndpointTransform
from .moments import MomentEstimates
from .responders import ResponderClass, SuccessCurve, class_counts
from .search import SearchResult, count_subsets
from .survival import LONG_TERM_MONTHS, SubgroupAudit
from .svg import Panel, Series, render

SCHEMA_VERSION = "1.0"
MODEL_KIND = "pci-model"

CENSORING_NOTE = (
    "Censored records are excluded from moment estimation and included in "
    "Kaplan-Meier curves and log-rank tests."
)
SUBGROUP_NOTE = (
    "Control patients are assigned a responder class by scoring their own "
    "predictors through the selected model."
)


def model_count_note(p: int, cap: int | None) -> str:
    n = count_subsets(p, cap)
    note = f"{n} subsets evaluated"
    if cap is None:
        note += f" (all non-empty subsets: 2^{p} - 1 = {2 ** p - 1})"
    else:
        note += f" (all non-empty subsets of size <= {cap})"
    if p == 13 and cap is None:
        note += ("; a count of 8204 models for 13 biomarkers does not equal "
                 "2^13 - 1 = 8191, so that figure cannot be all non-empty combinations")
    return note


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def load_schema() -> dict:
    text = resources.files("pcisearch").joinpath("schema/report.schema.json").read_text("utf-8")
    return json.loads(text)


def grid_summary(grid: np.ndarray, step: float | None) -> dict:
    return {
        "step": step,
        "points": int(grid.size),
        "min": float(grid[0]),
        "max": float(grid[-1]),
    }


def search_section(sr: SearchResult, p: int, step: float | None) -> dict:
    return {
        "subset_count": sr.subset_count,
        "expected_subset_count": count_subsets(p, sr.max_cardinality),
        "max_cardinality": sr.max_cardinality,
        "infeasible_count": sr.infeasible_count,
        "model_count_note": model_count_note(p, sr.max_cardinality),
        "criterion": sr.criterion,
        "threshold": sr.threshold,
        "rho_grid": grid_summary(sr.rho_values, step),
        "champions": [sr.champions[k].summary() for k in sorted(sr.champions)],
        "selected": sr.selected.summary() if sr.selected else None,
    }


def responders_section(ds: Dataset, subset, curves: list[SuccessCurve]) -> dict:
    arms = {i: Arm(int(a)).name.lower() for i, a in zip(ds.ids, ds.arm)}
    return {
        "subset": list(subset),
        "counts": class_counts(curves),
        "patients": [
            {
                "id": c.patient_id,
                "arm": arms[c.patient_id],
                "class": c.classification.value,
                "mean_delta": c.mean_delta,
                "prob_min": float(c.prob_by_rho.min()),
                "prob_max": float(c.prob_by_rho.max()),
            }
            for c in curves
        ],
    }


def model_document(m: MomentEstimates, subset, transform, step: float | None) -> dict:
    """The file consumed by the ``score`` and ``survival`` subcommands."""
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": MODEL_KIND,
        "subset": list(subset),
        "endpoint_transform": EndpointTransform(transform).value,
        "rho_step": step,
        "moments": m.to_dict(),
    }


def read_model(doc: dict) -> tuple[MomentEstimates, list[str], EndpointTransform, np.ndarray]:
    if doc.get("kind") != MODEL_KIND:
        raise ValueError("not a model file (missing kind: pci-model)")
    m = MomentEstimates.from_dict(doc["moments"])
    step = doc.get("rho_step") or 0.01
    return m, list(doc["subset"]), EndpointTransform(doc["endpoint_transform"]), rho_grid(step)


def build_report(
    config: dict,
    validation: dict,
    m: MomentEstimates,
    sr: SearchResult,
    step: float | None,
    responders: dict | None,
    audit: SubgroupAudit | None,
    warnings: list[str],
) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "pcisearch", "version": __version__},
        "config": config,
        "notes": {
            "censoring": CENSORING_NOTE,
            "endpoint_transform": f"moments use the {validation['endpoint_transform']} transform of survival time",
            "subgroups": SUBGROUP_NOTE,
            "long_term_months": LONG_TERM_MONTHS,
        },
        "data": validation,
        "moments": m.to_dict(),
        "search": search_section(sr, m.p, step),
        "responders": responders,
        "survival": audit.to_dict() if audit else None,
        "warnings": list(warnings),
    }


# figures


def figure_pci_by_cardinality(sr: SearchResult) -> str:
    ks = sorted(sr.champions)
    champs = [sr.champions[k] for k in ks]
    series = [
        Series("max PCI", ks, [c.pci_max for c in champs], markers=True),
        Series("mean PCI", ks, [c.pci_mean for c in champs], markers=True),
        Series("min PCI", ks, [c.pci_min for c in champs], markers=True),
    ]
    note = ""
    if sr.selected is not None:
        note = f"selected: {', '.join(sr.selected.names)}"
    panel = Panel("Best model per number of predictors", "number of predictors", "PCI",
                  series, xlim=(0.5, max(ks, default=1) + 0.5), ylim=(0.0, 1.0),
                  hline=sr.threshold, note=note)
    return render([panel], width=640)


def representative_curves(curves: list[SuccessCurve], k: int = 3) -> list[SuccessCurve]:
    """Highest, closest-to-zero and lowest expected effect, in that order."""
    if len(curves) <= k:
        return sorted(curves, key=lambda c: -c.mean_delta)
    order = sorted(range(len(curves)), key=lambda i: (-curves[i].mean_delta, i))
    mid = min(range(len(curves)), key=lambda i: (abs(curves[i].mean_delta), i))
    picks = [order[0], mid, order[-1]]
    seen, out = set(), []
    for i in picks:
        if i not in seen:
            seen.add(i)
            out.append(curves[i])
    return out


def figure_success_curves(curves: list[SuccessCurve]) -> str:
    series = [
        Series(f"{c.patient_id} ({c.classification.value})", c.rho_values.tolist(),
               c.prob_by_rho.tolist())
        for c in curves
    ]
    panel = Panel("Probability of treatment success", "correlation between potential outcomes",
                  "P(success)", series, xlim=(-1.0, 1.0), ylim=(0.0, 1.0), hline=0.5)
    return render([panel], width=640)


def _at_risk(times: np.ndarray, at: list[float]) -> list[int]:
    return [int((times >= t).sum()) for t in at]


def figure_km_subgroups(ds: Dataset, curves: list[SuccessCurve], audit: SubgroupAudit) -> str:
    labels = np.array([c.classification.value for c in curves])
    tmax = float(ds.time.max()) if ds.n else 1.0
    marks = [tmax * f for f in (0.0, 0.25, 0.5, 0.75)]
    panels = []
    for cls in (ResponderClass.GOOD, ResponderClass.BAD):
        comp = audit.comparisons[cls]
        series = []
        for arm, km in ((Arm.TREATED, comp.km_treated), (Arm.CONTROL, comp.km_control)):
            if km is None:
                continue
            sel = (labels == cls.value) & (ds.arm == int(arm))
            xs = [0.0, *km.event_times.tolist()]
            ys = [1.0, *km.survival.tolist()]
            last = float(ds.time[sel].max())
            if last > xs[-1]:
                xs.append(last)
                ys.append(ys[-1])
            risk = _at_risk(ds.time[sel], marks)
            series.append(Series(f"{arm.name.lower()} (n={km.n})", xs, ys, step=True,
                                 annotations=[(t, str(r)) for t, r in zip(marks, risk)]))
        note = ""
        if comp.logrank is not None:
            note = f"log-rank p = {comp.logrank.p_value:.3g}"
        elif comp.skipped:
            note = f"not tested: {comp.skipped}"
        panels.append(Panel(f"{cls.value} responders", "time", "survival", series,
                            xlim=(0.0, tmax), ylim=(0.0, 1.0), note=note))
    return render(panels)
