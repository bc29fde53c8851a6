"""Property-based checks of the estimators and the causal kernel."""

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pcisearch.causal import compute_pci, feasible_rhos, rho_grid
from pcisearch.dataset import Dataset
from pcisearch.errors import DegenerateTestError
from pcisearch.moments import estimate_moments
from pcisearch.responders import classify
from pcisearch.survival import km_estimate, log_rank

from conftest import random_moments

times_st = st.lists(st.integers(1, 30).map(float), min_size=1, max_size=40)


@st.composite
def survival_sample(draw, min_size=1):
    t = draw(st.lists(st.integers(1, 30).map(float), min_size=min_size, max_size=40))
    e = draw(st.lists(st.booleans(), min_size=len(t), max_size=len(t)))
    return np.array(t), np.array(e)


@given(survival_sample(), st.randoms(use_true_random=False))
def test_km_order_invariant(sample, rnd):
    t, e = sample
    perm = list(range(len(t)))
    rnd.shuffle(perm)
    a, b = km_estimate(t, e), km_estimate(t[perm], e[perm])
    np.testing.assert_array_equal(a.survival, b.survival)
    np.testing.assert_array_equal(a.event_times, b.event_times)


@given(survival_sample())
def test_km_shape(sample):
    km = km_estimate(*sample)
    assert np.all(np.diff(km.survival) <= 0)
    assert np.all((km.survival >= 0) & (km.survival <= 1))
    assert np.all(np.diff(km.at_risk) < 0)
    assert np.all(np.diff(km.event_times) > 0)


@given(times_st)
def test_km_without_censoring_is_empirical(t):
    t = np.array(t)
    km = km_estimate(t, np.ones(t.size, bool))
    expected = np.array([(t > x).sum() / t.size for x in km.event_times])
    np.testing.assert_array_equal(km.survival, expected)


@given(survival_sample(), survival_sample())
def test_log_rank_label_swap(g1, g2):
    try:
        a = log_rank(g1, g2)
    except DegenerateTestError:
        return
    b = log_rank(g2, g1)
    assert a.statistic == b.statistic and a.p_value == b.p_value
    assert 0 <= a.p_value <= 1


@given(arrays(float, st.integers(1, 12), elements=st.floats(0, 1)))
def test_classify_ignores_order(probs):
    assert classify(probs) is classify(probs[::-1])


def _dataset(seed, n=40, p=3):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    arm = np.arange(n) % 2
    t = np.exp(1 + X[:, 0] * (0.5 + arm) + 0.3 * rng.normal(size=n))
    return Dataset(tuple(f"x{j}" for j in range(p)), tuple(map(str, range(n))), arm, t,
                   rng.random(n) < 0.9, X, "log")


@settings(max_examples=40, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 10_000), st.permutations(range(40)))
def test_moments_permutation_invariant(seed, perm):
    ds = _dataset(seed)
    perm = np.array(perm)
    shuffled = Dataset(ds.predictor_names, tuple(ds.ids[i] for i in perm), ds.arm[perm], ds.time[perm],
                       ds.event[perm], ds.predictors[perm], ds.endpoint_transform)
    a, b = estimate_moments(ds), estimate_moments(shuffled)
    for key in ("mu0", "mu1", "var0", "var1", "muS", "SigmaS", "cov0S", "cov1S"):
        np.testing.assert_allclose(getattr(b, key), getattr(a, key), rtol=1e-12, atol=1e-14)


@settings(max_examples=40)
@given(st.integers(0, 10_000), st.integers(0, 2),
       st.floats(0.1, 10).flatmap(lambda a: st.sampled_from([a, -a])), st.floats(-5, 5))
def test_moments_affine_equivariant(seed, j, a, b):
    ds = _dataset(seed)
    X = ds.predictors.copy()
    X[:, j] = a * X[:, j] + b
    mapped = Dataset(ds.predictor_names, ds.ids, ds.arm, ds.time, ds.event, X, ds.endpoint_transform)
    m, mm = estimate_moments(ds), estimate_moments(mapped)
    scale = np.ones(ds.p)
    scale[j] = a
    np.testing.assert_allclose(mm.SigmaS, m.SigmaS * np.outer(scale, scale), rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(mm.cov0S, m.cov0S * scale, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(mm.cov1S, m.cov1S * scale, rtol=1e-9, atol=1e-12)
    shift = np.zeros(ds.p)
    shift[j] = b
    np.testing.assert_allclose(mm.muS, m.muS * scale + shift, rtol=1e-9, atol=1e-9)


@settings(max_examples=60)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 5))
def test_pci_bounds_and_nesting(seed, p):
    rng = np.random.default_rng(seed)
    m, rho = random_moments(rng, p)
    full = list(range(p))
    sg = feasible_rhos(m, full, rho_grid(0.05))
    for r in sg.feasible_rhos:
        big = compute_pci(m, full, r)
        assert 0 <= big <= 1
        small = compute_pci(m, full[:-1], r) if p > 1 else 0.0
        assert small <= big + 1e-12


@settings(max_examples=60)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4))
def test_generating_rho_is_feasible(seed, p):
    rng = np.random.default_rng(seed)
    m, rho = random_moments(rng, p)
    assert feasible_rhos(m, range(p), np.array([rho])).feasible_mask.all()
