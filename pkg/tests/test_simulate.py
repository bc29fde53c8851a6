import json

import numpy as np
import pytest

from pcisearch.dataset import Dataset, EndpointTransform, load_csv
from pcisearch.errors import DataValidationError
from pcisearch.moments import estimate_moments
from pcisearch.simulate import (
    SimulationSpec,
    heterogeneous_trial_spec,
    random_spec,
    simulate,
    write_simulation,
)


def _spec(**kw):
    base = dict(mu0=2.0, mu1=2.3, var0=0.5, var1=0.8, true_rho=0.3, muS=[0.0, 1.0],
                SigmaS=[[1.0, 0.2], [0.2, 1.0]], cov0S=[0.1, 0.2], cov1S=[0.4, 0.1], n=300, seed=4)
    base.update(kw)
    return SimulationSpec(**base)


def test_same_seed_same_bytes(tmp_path):
    write_simulation(simulate(_spec(censoring_rate=0.3)), tmp_path / "a.csv", tmp_path / "a.json")
    write_simulation(simulate(_spec(censoring_rate=0.3)), tmp_path / "b.csv", tmp_path / "b.json")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    write_simulation(simulate(_spec(seed=5)), tmp_path / "c.csv")
    assert (tmp_path / "a.csv").read_bytes() != (tmp_path / "c.csv").read_bytes()


def test_no_censoring_all_events():
    trial = simulate(_spec())
    assert trial.dataset.event.all()


def test_censoring_shortens_times():
    a, b = simulate(_spec()), simulate(_spec(censoring_rate=0.4))
    # identical draws; censored records keep a fraction of their latent time
    np.testing.assert_array_equal(a.y0, b.y0)
    cens = ~b.dataset.event
    assert 0.25 < cens.mean() < 0.55
    assert np.all(b.dataset.time[cens] <= a.dataset.time[cens])
    np.testing.assert_array_equal(b.dataset.time[~cens], a.dataset.time[~cens])


def test_observed_outcome_is_assigned_arm():
    trial = simulate(_spec())
    ds = trial.dataset
    y = np.where(ds.arm == 1, trial.y1, trial.y0)
    np.testing.assert_allclose(ds.endpoint, y, rtol=1e-12)
    np.testing.assert_allclose(trial.delta, trial.y1 - trial.y0)


def test_non_psd_rejected():
    with pytest.raises(DataValidationError):
        _spec(true_rho=-0.999, cov0S=[0.6, 0.2], cov1S=[0.8, 0.1])
    with pytest.raises(DataValidationError):
        _spec(censoring_rate=1.0)


def test_identity_transform_requires_positive_times():
    with pytest.raises(DataValidationError):
        simulate(_spec(mu0=0.0, mu1=0.0, transform="identity"))


def test_sidecar_and_csv_round_trip(tmp_path):
    trial = simulate(_spec(censoring_rate=0.2))
    write_simulation(trial, tmp_path / "t.csv", tmp_path / "t.json")
    side = json.loads((tmp_path / "t.json").read_text())
    spec = SimulationSpec.from_dict(side["spec"])
    assert spec.to_dict() == trial.spec.to_dict()
    assert side["analytic_pci_full"] == pytest.approx(trial.spec.analytic_pci())
    first = side["patients"][0]
    assert first["delta"] == pytest.approx(first["y1"] - first["y0"])
    ds = load_csv(tmp_path / "t.csv", transform="log")
    np.testing.assert_array_equal(ds.time, trial.dataset.time)


@pytest.mark.slow
def test_independent_predictors_have_small_covariance():
    spec = _spec(cov0S=[0.0, 0.0], cov1S=[0.0, 0.0], n=100_000)
    m = estimate_moments(simulate(spec).dataset)
    assert np.all(np.abs(m.cov0S) < 0.02) and np.all(np.abs(m.cov1S) < 0.02)


@pytest.mark.slow
def test_pooled_covariance_matches_each_arm():
    ds = simulate(_spec(n=100_000)).dataset
    m = estimate_moments(ds)
    for a in (0, 1):
        C = np.cov(ds.predictors[ds.arm == a], rowvar=False)
        assert np.all(np.abs(m.SigmaS - C) <= 0.02 * np.abs(C).max())


def test_random_spec_is_valid():
    rng = np.random.default_rng(0)
    for seed in range(5):
        spec = random_spec(rng, 4, 1000, seed)
        assert spec.transform is EndpointTransform.LOG
        assert 0 <= spec.analytic_pci() <= 1


def test_heterogeneous_trial_structure():
    spec, informative = heterogeneous_trial_spec(0)
    assert spec.p == 13 and spec.n == 200
    assert informative == ("inf1", "inf2", "inf3", "inf4", "inf5")
    d = spec.cov1S - spec.cov0S
    beta = np.linalg.solve(spec.SigmaS, d)
    np.testing.assert_allclose(beta[:5], 0.6)
    np.testing.assert_allclose(beta[5:], 0.0, atol=1e-15)
    assert spec.analytic_pci(range(5)) == pytest.approx(spec.analytic_pci(), abs=1e-12)
    assert spec.analytic_pci(range(5)) > 0.9
    trial = simulate(spec)
    assert isinstance(trial.dataset, Dataset)
    assert trial.dataset.predictor_names[:5] == informative
