import math

import numpy as np
import pytest

from tvzip import (ConstantLink, IngarchParams, LogisticLink, ModelOrder, SimulationSpec,
                   SinusoidalLink, simulate_seasonal_ar, simulate_tvzip)
from tvzip.errors import (AlignmentError, ConstraintError, EmptyInputError,
                          MissingCovariateError, NonStationaryError)
from tvzip.simulation import EXOG_STREAM, make_rng

A1 = dict(order=ModelOrder(1, 0), params=IngarchParams(1.0, (0.4,)),
          link=SinusoidalLink(0.1, 0.1, delta=1e-4, s=12))


def test_same_seed_same_series_and_different_seed_differs():
    a = simulate_tvzip(SimulationSpec(n=360, seed=7, **A1))
    b = simulate_tvzip(SimulationSpec(n=360, seed=7, **A1))
    c = simulate_tvzip(SimulationSpec(n=360, seed=8, **A1))
    assert np.array_equal(a.counts, b.counts) and np.array_equal(a.lam, b.lam)
    assert not np.array_equal(a.counts, c.counts)


def test_paths_are_consistent():
    sim = simulate_tvzip(SimulationSpec(
        order=ModelOrder(1, 1), params=IngarchParams(1.0, (0.4,), (0.3,)),
        link=SinusoidalLink(0.2, -0.1, delta=1e-3), n=500, seed=3))
    x, lam = sim.counts, sim.lam
    assert x.dtype.kind == "i" and np.all(x >= 0)
    assert np.all(lam >= 1.0)
    assert lam[0] == 1.0
    np.testing.assert_allclose(lam[1:], 1.0 + 0.4 * x[:-1] + 0.3 * lam[:-1], rtol=1e-14)
    assert np.all(sim.omega >= 1e-3 - 1e-12)


def test_degenerate_constant_link_mean():
    n = 100_000
    sim = simulate_tvzip(SimulationSpec(order=ModelOrder(1, 0), params=IngarchParams(1.0, (0.0,)),
                                        link=ConstantLink(0.5), n=n, seed=11))
    # X = (1 - Z) Poisson(1): mean 0.5, variance 0.5 * (1 + 0.5) = 0.75.
    se = math.sqrt(0.75 / n)
    assert abs(sim.counts.mean() - 0.5) <= 3 * se


def test_a1_zero_fraction_self_consistent():
    # Long-run estimate of the expected zero share omega_t + (1 - omega_t) exp(-lam_t).
    ref = []
    for seed in range(100, 140):
        s = simulate_tvzip(SimulationSpec(n=360, seed=seed, **A1))
        ref.append(np.mean(s.omega + (1 - s.omega) * np.exp(-s.lam)))
    expected = float(np.mean(ref))
    sims = [simulate_tvzip(SimulationSpec(n=360, seed=seed, **A1)) for seed in range(1, 41)]
    zeros = np.array([np.mean(s.counts == 0) for s in sims])
    se = zeros.std(ddof=1) / math.sqrt(zeros.size)
    one = zeros[0]
    se_one = math.sqrt(expected * (1 - expected) / 360) * 2  # allow for serial dependence
    assert abs(zeros.mean() - expected) <= 3 * se + 3 * np.std(ref, ddof=1) / math.sqrt(len(ref))
    assert abs(one - expected) <= 3 * se_one


def test_zero_fraction_at_least_structural_floor():
    spec = SimulationSpec(order=ModelOrder(2, 0), params=IngarchParams(2.0, (0.3, 0.2)),
                          link=SinusoidalLink(-0.25, -0.25, delta=1e-4), n=50_000, seed=5)
    sim = simulate_tvzip(spec)
    w = sim.omega.mean()
    se = math.sqrt(w * (1 - w) / sim.counts.size)
    assert np.mean(sim.counts == 0) >= w - 3 * se


def test_spec_validation():
    with pytest.raises(EmptyInputError):
        SimulationSpec(n=0, seed=1, **A1)
    with pytest.raises(AlignmentError):
        SimulationSpec(order=ModelOrder(2, 0), params=IngarchParams(1.0, (0.4,)),
                       link=ConstantLink(0.2), n=10, seed=1)
    with pytest.raises(MissingCovariateError):
        SimulationSpec(order=ModelOrder(1, 0), params=IngarchParams(1.0, (0.4,)),
                       link=LogisticLink(-2.0, 0.0), n=10, seed=1)
    with pytest.raises(AlignmentError):
        SimulationSpec(order=ModelOrder(1, 0), params=IngarchParams(1.0, (0.4,)),
                       link=LogisticLink(-2.0, 0.0), n=10, seed=1, exog=np.zeros(9))
    with pytest.raises(ConstraintError):
        SimulationSpec(order=ModelOrder(1, 0), params=IngarchParams(1.0, (0.4,)),
                       link=SinusoidalLink(delta=1e-4), n=10, seed=1)
    with pytest.raises(ConstraintError):
        make_rng(-1)
    with pytest.raises(ConstraintError):
        make_rng(2**64)


def test_logistic_simulation_uses_exog():
    v = simulate_seasonal_ar(0.25, 12, 200, 9)
    spec = SimulationSpec(order=ModelOrder(1, 0), params=IngarchParams(1.0, (0.4,)),
                          link=LogisticLink(2.0, 1.0), n=200, seed=9, exog=v)
    sim = simulate_tvzip(spec)
    np.testing.assert_allclose(sim.omega, 1 / (1 + np.exp(-(2.0 + v))), rtol=1e-14)
    assert np.array_equal(sim.series.exog, v)


def test_seasonal_ar_examples():
    eps = make_rng(4, EXOG_STREAM).standard_normal(50)
    assert np.array_equal(simulate_seasonal_ar(0.0, 12, 50, 4), eps)
    a = simulate_seasonal_ar(0.25, 12, 50, 4)
    assert np.array_equal(a, simulate_seasonal_ar(0.25, 12, 50, 4))
    np.testing.assert_allclose(a[:12], eps[:12], rtol=0, atol=0)
    np.testing.assert_allclose(a[12:], 0.25 * a[:-12] + eps[12:], rtol=1e-14, atol=1e-15)
    with pytest.raises(NonStationaryError):
        simulate_seasonal_ar(1.0, 12, 10, 1)
    with pytest.raises(NonStationaryError):
        simulate_seasonal_ar(-1.2, 12, 10, 1)


def test_seasonal_ar_variance():
    n = 100_000
    v = simulate_seasonal_ar(0.25, 12, n, 21)
    target = 1 / (1 - 0.0625)
    # Var of the sample variance of a Gaussian AR is about 2 sigma^4 (1 + eta^2) / (1 - eta^2) / n.
    se = math.sqrt(2 * target ** 2 * (1 + 0.0625) / (1 - 0.0625) / n)
    assert abs(v.var() - target) <= 3 * se


def test_streams_do_not_overlap():
    counts_u = make_rng(42, 0).random(1000)
    exog_u = make_rng(42, EXOG_STREAM).random(1000)
    next_u = make_rng(43, 0).random(1000)
    assert not np.intersect1d(counts_u, exog_u).size
    assert not np.intersect1d(counts_u, next_u).size
