"""Command-line entry point: ``pcisearch {analyze,search,score,survival,simulate,validate}``.

Exit codes: 0 success, 3 schema error, 4 insufficient data, 5 invalid data,
6 singular predictor covariance, 7 no feasible correlation, 8 domain error,
9 capacity error, 10 degenerate survival test, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import report as rpt
from .causal import DEFAULT_RHO_STEP, rho_grid
from .dataset import Dataset, EndpointTransform, load_csv, validate
from .errors import PciError
from .moments import estimate_moments
from .responders import score_cohort, success_curves
from .search import enumerate_and_score
from .simulate import SimulationSpec, heterogeneous_trial_spec, simulate, write_simulation
from .survival import subgroup_audit

logger = logging.getLogger("pcisearch")

FIG_SEARCH = "fig1_pci_by_cardinality.svg"
FIG_SUCCESS = "fig2_success_curves.svg"
FIG_SURVIVAL = "fig3_km_subgroups.svg"


@dataclass
class AnalysisConfig:
    input: str
    columns: dict = field(default_factory=dict)
    predictors: list | None = None
    rho_step: float = DEFAULT_RHO_STEP
    threshold: float = 0.7
    endpoint_transform: str = EndpointTransform.IDENTITY.value
    max_cardinality: int | None = None
    worker_count: int | None = None
    seed: int | None = None
    criterion: str = "mean"

    def __post_init__(self):
        if not 0 < self.rho_step <= 0.5:
            raise ValueError("rho-step must lie in (0, 0.5]")
        if not 0 <= self.threshold < 1:
            raise ValueError("threshold must lie in [0, 1)")
        self.endpoint_transform = EndpointTransform(self.endpoint_transform).value

    def report_view(self) -> dict:
        """Config as recorded in reports; worker count is excluded so reports do not depend on it."""
        d = asdict(self)
        d.pop("worker_count")
        return d


def _load(cfg: AnalysisConfig) -> Dataset:
    return load_csv(cfg.input, cfg.columns or None, cfg.predictors, cfg.endpoint_transform)


def run_analyze(cfg: AnalysisConfig) -> tuple[dict, dict[str, str], dict]:
    """Full pipeline.  Returns the report, the SVG figures by filename and the model document."""
    ds = _load(cfg)
    validation = validate(ds)
    m = estimate_moments(ds)
    grid = rho_grid(cfg.rho_step)
    sr = enumerate_and_score(m, grid, cfg.max_cardinality, cfg.threshold, cfg.criterion,
                             cfg.worker_count)
    notes = []
    if ds.dropped_rows:
        notes.append(f"{ds.dropped_rows} row(s) dropped for missing or unparseable values")
    figures = {FIG_SEARCH: rpt.figure_pci_by_cardinality(sr)}
    responders = audit = model = None
    if sr.selected is None:
        notes.append(f"no model reached a minimum PCI above {cfg.threshold}")
    else:
        subset = list(sr.selected.names)
        curves = score_cohort(m, subset, ds, grid)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            audit = subgroup_audit(ds, curves)
        notes.extend(audit.warnings)
        responders = rpt.responders_section(ds, subset, curves)
        figures[FIG_SUCCESS] = rpt.figure_success_curves(rpt.representative_curves(curves))
        figures[FIG_SURVIVAL] = rpt.figure_km_subgroups(ds, curves, audit)
        model = rpt.model_document(m, subset, ds.endpoint_transform, cfg.rho_step)
    doc = rpt.build_report(cfg.report_view(), validation, m, sr, cfg.rho_step, responders, audit, notes)
    return doc, figures, model


def _write(out: Path, name: str, text: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text, encoding="utf-8")
    logger.info("wrote %s", out / name)


def _config_from_args(args) -> AnalysisConfig:
    columns = {k: v for k, v in (("id", args.id_col), ("arm", args.arm_col),
                                 ("time", args.time_col), ("event", args.event_col)) if v}
    predictors = [p.strip() for p in args.predictors.split(",")] if args.predictors else None
    search = {k: getattr(args, k) for k in ("rho_step", "threshold", "max_cardinality",
                                             "worker_count", "seed", "criterion") if hasattr(args, k)}
    return AnalysisConfig(input=args.input, columns=columns, predictors=predictors,
                          endpoint_transform=args.endpoint_transform, **search)


def cmd_analyze(args) -> int:
    cfg = _config_from_args(args)
    doc, figures, model = run_analyze(cfg)
    out = Path(args.out)
    _write(out, "report.json", rpt.dumps(doc))
    for name, svg in figures.items():
        _write(out, name, svg)
    if model is not None:
        _write(out, "model.json", rpt.dumps(model))
    sel = doc["search"]["selected"]
    print(f"subsets evaluated: {doc['search']['subset_count']}")
    print("selected: " + (", ".join(sel["predictors"]) if sel else "none"))
    return 0


def cmd_search(args) -> int:
    cfg = _config_from_args(args)
    ds = _load(cfg)
    m = estimate_moments(ds)
    sr = enumerate_and_score(m, rho_grid(cfg.rho_step), cfg.max_cardinality, cfg.threshold,
                             cfg.criterion, cfg.worker_count)
    out = Path(args.out)
    _write(out, "search_table.json", sr.table_json() + "\n")
    _write(out, "search_table.csv", sr.table_csv())
    _write(out, "search_summary.json", rpt.dumps(rpt.search_section(sr, m.p, cfg.rho_step)))
    _write(out, FIG_SEARCH, rpt.figure_pci_by_cardinality(sr))
    if sr.selected is not None:
        _write(out, "model.json",
               rpt.dumps(rpt.model_document(m, sr.selected.names, ds.endpoint_transform, cfg.rho_step)))
    print(f"subsets evaluated: {sr.subset_count}")
    return 0


def _parse_assignments(pairs) -> dict[str, float]:
    values = {}
    for pair in pairs:
        name, sep, value = pair.partition("=")
        if not sep:
            raise ValueError(f"expected name=value, got {pair!r}")
        values[name.strip()] = float(value)
    return values


def cmd_score(args) -> int:
    m, subset, transform, grid = rpt.read_model(json.loads(Path(args.model).read_text("utf-8")))
    if args.input:
        ds = load_csv(args.input, predictors=None, transform=transform)
        curves = score_cohort(m, subset, ds, grid)
    else:
        values = _parse_assignments(args.set or [])
        missing = [nm for nm in subset if nm not in values]
        if missing:
            raise ValueError(f"missing value(s) for {missing}")
        curves = success_curves(m, subset, [[values[nm] for nm in subset]], [args.patient_id], grid)
    doc = {
        "schema_version": rpt.SCHEMA_VERSION,
        "subset": subset,
        "endpoint_transform": transform.value,
        "patients": [c.to_dict() for c in curves],
    }
    text = rpt.dumps(doc)
    if args.out:
        out = Path(args.out)
        _write(out, "scores.json", text)
        _write(out, FIG_SUCCESS, rpt.figure_success_curves(curves[:8]))
    else:
        sys.stdout.write(text)
    return 0


def cmd_survival(args) -> int:
    m, subset, transform, grid = rpt.read_model(json.loads(Path(args.model).read_text("utf-8")))
    ds = load_csv(args.input, transform=transform)
    curves = score_cohort(m, subset, ds, grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        audit = subgroup_audit(ds, curves)
    for w in audit.warnings:
        logger.warning(w)
    out = Path(args.out)
    _write(out, "survival.json", rpt.dumps(audit.to_dict()))
    _write(out, FIG_SURVIVAL, rpt.figure_km_subgroups(ds, curves, audit))
    return 0


def cmd_simulate(args) -> int:
    if args.spec:
        d = json.loads(Path(args.spec).read_text("utf-8"))
        if args.seed is not None:
            d["seed"] = args.seed
        if args.n is not None:
            d["n"] = args.n
        spec = SimulationSpec.from_dict(d)
    else:
        spec, _ = heterogeneous_trial_spec(args.seed or 0, n=args.n or 200)
    trial = simulate(spec)
    write_simulation(trial, args.out, args.sidecar)
    print(f"wrote {spec.n} patients to {args.out}")
    return 0


def cmd_validate(args) -> int:
    cfg = _config_from_args(args)
    sys.stdout.write(rpt.dumps(validate(_load(cfg))))
    return 0


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", help="trial CSV")
    p.add_argument("--id-col")
    p.add_argument("--arm-col")
    p.add_argument("--time-col")
    p.add_argument("--event-col")
    p.add_argument("--predictors", help="comma-separated predictor columns (default: all others)")
    p.add_argument("--endpoint-transform", choices=[t.value for t in EndpointTransform],
                   default=EndpointTransform.IDENTITY.value)


def _add_search_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rho-step", type=float, default=DEFAULT_RHO_STEP)
    p.add_argument("--threshold", type=float, default=0.7)
    p.add_argument("--max-cardinality", type=int)
    p.add_argument("--worker-count", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--criterion", choices=["mean", "min"], default="mean",
                   help="champion criterion within a cardinality")
    p.add_argument("--out", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pcisearch", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="full pipeline: search, select, score, survival audit")
    _add_data_args(p)
    _add_search_args(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("search", help="score every predictor subset")
    _add_data_args(p)
    _add_search_args(p)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("score", help="success probabilities from a model file")
    p.add_argument("--model", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="patient CSV")
    src.add_argument("--set", nargs="+", metavar="NAME=VALUE", help="inline predictor values")
    p.add_argument("--patient-id", default="patient")
    p.add_argument("--out", help="output directory (default: JSON to stdout)")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("survival", help="Kaplan-Meier and log-rank within responder classes")
    p.add_argument("input")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_survival)

    p = sub.add_parser("simulate", help="write a synthetic joint-normal trial")
    p.add_argument("--spec", help="simulation spec JSON (default: built-in heterogeneous trial)")
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--out", required=True, help="CSV path")
    p.add_argument("--sidecar", help="ground-truth JSON path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="data validation report")
    _add_data_args(p)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except PciError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
