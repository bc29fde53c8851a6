import json
import xml.etree.ElementTree as ET

import jsonschema
import numpy as np
import pytest

from pcisearch import cli
from pcisearch.report import dumps, load_schema, model_count_note
from pcisearch.simulate import SimulationSpec, simulate, write_simulation

from conftest import write_trial_csv


def _small_spec(seed=1, n=240):
    rng = np.random.default_rng(seed)
    p = 4
    S = np.eye(p) + 0.1
    beta = np.array([0.9, 0.7, 0.0, 0.0])
    gamma = np.array([0.1, 0.0, 0.2, 0.0])
    var0 = 0.1 + gamma @ S @ gamma
    var1 = 0.1 + (gamma + beta) @ S @ (gamma + beta)
    return SimulationSpec(
        mu0=np.log(10), mu1=np.log(10) + 0.3, var0=var0, var1=var1,
        true_rho=gamma @ S @ (gamma + beta) / np.sqrt(var0 * var1),
        muS=rng.normal(size=p), SigmaS=S, cov0S=S @ gamma, cov1S=S @ (gamma + beta), n=n,
        censoring_rate=0.1, seed=seed, predictor_names=("a", "b", "c", "d"),
    )


@pytest.fixture
def trial_csv(tmp_path):
    path = tmp_path / "trial.csv"
    write_simulation(simulate(_small_spec()), path, tmp_path / "truth.json")
    return path


def _analyze(csv, out, *extra):
    return cli.main(["analyze", str(csv), "--endpoint-transform", "log", "--out", str(out), *extra])


def test_analyze_outputs(trial_csv, tmp_path):
    out = tmp_path / "out"
    assert _analyze(trial_csv, out) == 0
    doc = json.loads((out / "report.json").read_text())
    jsonschema.validate(doc, load_schema())
    assert doc["search"]["subset_count"] == 2 ** 4 - 1
    assert doc["search"]["selected"]["predictors"] == ["a", "b"]
    assert "worker_count" not in doc["config"]
    for name in ("fig1_pci_by_cardinality.svg", "fig2_success_curves.svg", "fig3_km_subgroups.svg"):
        root = ET.parse(out / name).getroot()
        assert root.tag.endswith("svg")
    model = json.loads((out / "model.json").read_text())
    assert model["kind"] == "pci-model" and model["subset"] == ["a", "b"]


def test_analyze_is_deterministic_across_workers(trial_csv, tmp_path):
    outs = []
    for i, w in enumerate(("1", "2", "8", "1")):
        out = tmp_path / f"o{i}"
        assert _analyze(trial_csv, out, "--worker-count", w) == 0
        outs.append(out)
    for name in ("report.json", "fig1_pci_by_cardinality.svg", "fig3_km_subgroups.svg", "model.json"):
        ref = (outs[0] / name).read_bytes()
        assert all((o / name).read_bytes() == ref for o in outs[1:])


def test_report_floats_round_trip(trial_csv, tmp_path):
    cfg = cli.AnalysisConfig(input=str(trial_csv), endpoint_transform="log")
    doc, _, _ = cli.run_analyze(cfg)
    text = dumps(doc)
    assert dumps(json.loads(text)) == text


def test_search_and_score_and_survival(trial_csv, tmp_path, capsys):
    out = tmp_path / "s"
    assert cli.main(["search", str(trial_csv), "--endpoint-transform", "log", "--out", str(out),
                     "--max-cardinality", "2", "--criterion", "min"]) == 0
    table = json.loads((out / "search_table.json").read_text())
    assert len(table) == 4 + 6
    assert (out / "search_table.csv").read_text().count("\n") == 11
    model = out / "model.json"
    capsys.readouterr()
    assert cli.main(["score", "--model", str(model), "--set", "a=1.0", "b=0.5", "--patient-id", "x"]) == 0
    scored = json.loads(capsys.readouterr().out)
    assert scored["patients"][0]["id"] == "x"
    assert scored["patients"][0]["class"] in ("good", "rare", "bad")
    assert cli.main(["score", "--model", str(model), "--input", str(trial_csv), "--out",
                     str(tmp_path / "sc")]) == 0
    assert len(json.loads((tmp_path / "sc" / "scores.json").read_text())["patients"]) == 240
    assert cli.main(["survival", str(trial_csv), "--model", str(model), "--out", str(tmp_path / "sv")]) == 0
    surv = json.loads((tmp_path / "sv" / "survival.json").read_text())
    assert [c["class"] for c in surv["classes"]] == ["good", "bad", "rare"]
    assert cli.main(["score", "--model", str(model), "--set", "a=1.0"]) == 2


def test_validate_and_simulate(tmp_path, capsys):
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(_small_spec().to_dict()))
    csv = tmp_path / "sim.csv"
    assert cli.main(["simulate", "--spec", str(spec_path), "--seed", "9", "--n", "50",
                     "--out", str(csv), "--sidecar", str(tmp_path / "side.json")]) == 0
    assert csv.read_text().count("\n") == 51
    capsys.readouterr()
    assert cli.main(["validate", str(csv)]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["n"] == 50 and rep["p"] == 4
    assert cli.main(["simulate", "--seed", "2", "--out", str(tmp_path / "h.csv")]) == 0
    assert (tmp_path / "h.csv").read_text().splitlines()[0].endswith("noise8")


def test_exit_codes(tmp_path):
    rows = [(f"r{i}", i % 2, 3.0 + i, 1, float(i % 5), float((i * 7) % 3)) for i in range(20)]
    good = write_trial_csv(tmp_path / "g.csv", rows)
    out = str(tmp_path / "o")
    missing = write_trial_csv(tmp_path / "m.csv", rows, ("id", "arm", "months", "event", "x1", "x2"))
    assert cli.main(["analyze", str(missing), "--out", out]) == 3
    assert cli.main(["analyze", str(good), "--time-col", "months", "--out", out]) == 3
    assert cli.main(["analyze", str(write_trial_csv(tmp_path / "i.csv", rows[:5])), "--out", out]) == 4
    assert cli.main(["analyze", str(write_trial_csv(tmp_path / "d.csv", rows + [rows[0]])),
                     "--out", out]) == 5
    collinear = [(r[0], r[1], r[2], r[3], r[4], 2 * r[4]) for r in rows]
    assert cli.main(["analyze", str(write_trial_csv(tmp_path / "c.csv", collinear)), "--out", out]) == 6
    world = {"schema_version": "1.0", "kind": "pci-model", "subset": ["s"], "endpoint_transform": "identity",
             "rho_step": 0.01, "moments": {"mu0": 0, "mu1": 0, "var0": 1, "var1": 4, "muS": [0],
                                           "SigmaS": [[1]], "cov0S": [1], "cov1S": [2], "n0": 5,
                                           "n1": 5, "predictor_names": ["s"]}}
    (tmp_path / "w.json").write_text(json.dumps(world))
    assert cli.main(["score", "--model", str(tmp_path / "w.json"), "--set", "s=1"]) == 7
    wide = [(f"r{i}", i % 2, 1.0 + i, 1, *np.random.default_rng(i).normal(size=25)) for i in range(80)]
    header = ("id", "arm", "time", "event", *(f"x{j}" for j in range(25)))
    assert cli.main(["analyze", str(write_trial_csv(tmp_path / "w.csv", wide, header)), "--out", out]) == 9
    assert cli.main(["analyze", str(good), "--rho-step", "0.9", "--out", out]) == 2


def test_model_count_note():
    assert "8204" in model_count_note(13, None)
    assert "8191" in model_count_note(13, None)
    assert "8204" not in model_count_note(5, None)
