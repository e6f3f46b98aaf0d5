import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tvzip import (ConstantLink, LogisticLink, PiecewiseMonthlyLink, SinusoidalLink, omega_at,
                   omega_gradient, parse_link, validate_sinusoidal)
from tvzip.errors import ConstraintError, MissingCovariateError
from tvzip.links import default_month_index


def test_validate_sinusoidal_examples():
    ok = validate_sinusoidal(0.0, 0.0, 0.1)
    assert ok.feasible and ok.C == pytest.approx(0.1)
    ok = validate_sinusoidal(0.10, 0.10, 0.0001)
    assert ok.feasible and ok.C == pytest.approx(math.sqrt(0.02) + 0.0001, abs=1e-15)
    assert round(ok.C, 6) == 0.141521
    bad = validate_sinusoidal(0.5, 0.3, 0.0001)
    assert not bad.feasible and bad.C is None and "1/2 - delta" in bad.violated
    bad = validate_sinusoidal(0.3, 0.3, 0.1)
    assert not bad.feasible and "sqrt" in bad.violated
    with pytest.raises(ConstraintError):
        validate_sinusoidal(0.1, 0.1, 0.5)
    with pytest.raises(ConstraintError):
        validate_sinusoidal(0.1, 0.1, 0.0)


def test_sinusoid_zero_amplitude_is_delta():
    link = SinusoidalLink(0.0, 0.0, delta=0.07, s=12)
    np.testing.assert_allclose(omega_at(link, np.arange(1, 40)), 0.07, atol=1e-15)


def test_infeasible_construction_raises():
    with pytest.raises(ConstraintError):
        SinusoidalLink(0.5, 0.3, delta=1e-4)
    with pytest.raises(ConstraintError):
        ConstantLink(1.0)
    with pytest.raises(ConstraintError):
        LogisticLink(float("inf"), 0.0)


def test_logistic_examples():
    link = LogisticLink(0.0, 0.0)
    assert omega_at(link, 1, 3.7) == 0.5
    assert omega_gradient(link, 1, 3.7)[0] == 0.25
    link = LogisticLink(-2.0, 0.0)
    assert omega_at(link, 5, 1.0) == pytest.approx(1 / (1 + math.e ** 2), abs=1e-15)
    assert round(omega_at(link, 5, 1.0), 6) == 0.119203
    g = omega_gradient(link, 1, 3.0)
    w = 1 / (1 + math.e ** 2)
    assert g[1] == pytest.approx(3 * w * (1 - w), abs=1e-15)
    assert g[1] == pytest.approx(0.314981, abs=1e-6)
    with pytest.raises(MissingCovariateError):
        omega_at(link, 1)


def test_harmonic_basis_at_quarter_period():
    link = SinusoidalLink(0.1, 0.1, delta=1e-4, s=12)
    basis = link.harmonic_basis(3)  # 2 pi 3 / 12 = pi / 2
    assert basis[0] == pytest.approx(1.0, abs=1e-15)
    assert basis[1] == pytest.approx(0.0, abs=1e-15)


def test_sinusoid_gradient_includes_offset_term():
    a, b = 0.1, 0.2
    link = SinusoidalLink(a, b, delta=1e-4, s=12)
    r = math.hypot(a, b)
    g = omega_gradient(link, 3)
    assert g[0] == pytest.approx(1.0 + a / r, abs=1e-14)
    assert g[1] == pytest.approx(0.0 + b / r, abs=1e-14)


def _fd_link(link, t, exog=None, h=1e-6):
    gamma = link.gamma()
    cols = []
    for k in range(gamma.size):
        up, dn = gamma.copy(), gamma.copy()
        up[k] += h
        dn[k] -= h
        cols.append((link.omega_from(up, t, exog) - link.omega_from(dn, t, exog)) / (2 * h))
    return np.stack(cols, axis=-1)


feasible_ab = st.tuples(st.floats(0.01, 0.45), st.floats(0, 2 * math.pi), st.floats(1e-4, 0.04))


@settings(max_examples=100, deadline=None)
@given(feasible_ab, st.sampled_from([4, 7, 12, 52]))
def test_sinusoid_gradient_matches_differences(abd, s):
    r, phase, delta = abd
    r = min(r, 0.5 - delta - 1e-3)
    link = SinusoidalLink(r * math.cos(phase), r * math.sin(phase), delta=delta, s=s)
    t = np.arange(1, 2 * s + 1)
    np.testing.assert_allclose(omega_gradient(link, t), _fd_link(link, t), rtol=1e-6, atol=1e-8)


@settings(max_examples=100, deadline=None)
@given(st.floats(-4, 4), st.floats(-3, 3), st.lists(st.floats(-3, 3), min_size=1, max_size=20))
def test_logistic_gradient_and_range(d0, d1, v):
    link = LogisticLink(d0, d1)
    v = np.array(v)
    t = np.arange(1, v.size + 1)
    w = omega_at(link, t, v)
    assert np.all((w > 0) & (w < 1))
    np.testing.assert_allclose(omega_gradient(link, t, v), _fd_link(link, t, v), rtol=1e-6,
                               atol=1e-9)


@settings(max_examples=200, deadline=None)
@given(feasible_ab, st.sampled_from([4, 6, 12, 24, 52]))
def test_integer_sweep_stays_in_bounds(abd, s):
    r, phase, delta = abd
    r = min(r, 0.5 - delta)
    link = SinusoidalLink(r * math.cos(phase), r * math.sin(phase), delta=delta, s=s)
    w = omega_at(link, np.arange(1, s + 1))
    assert np.all(w >= delta - 1e-12) and np.all(w <= 1 - delta + 1e-12)


def test_sweep_minimum_hits_delta_when_trough_is_on_grid():
    # Trough at 2 pi t / s + phi = 3 pi / 2: pick the phase so that t = 5 hits it.
    s, delta, r = 12, 1e-4, 0.3
    phi = 1.5 * math.pi - 2 * math.pi * 5 / s
    link = SinusoidalLink(r * math.cos(phi), r * math.sin(phi), delta=delta, s=s)
    w = omega_at(link, np.arange(1, s + 1))
    assert abs(w.min() - delta) <= 1e-9
    assert abs(w.max() - (2 * r + delta)) <= 1e-9


def test_piecewise_monthly_constant_within_month():
    link = PiecewiseMonthlyLink(0.2, -0.1, delta=1e-3)
    t = np.arange(1, 105)
    w = omega_at(link, t)
    m = default_month_index(t)
    for month in np.unique(m):
        assert np.ptp(w[m == month]) == 0.0
    assert default_month_index([1, 4, 5, 52]).tolist() == [1.0, 1.0, 2.0, 12.0]
    explicit = PiecewiseMonthlyLink(0.2, -0.1, delta=1e-3, months=[1, 1, 2, 2, 3])
    w = omega_at(explicit, np.arange(1, 6))
    assert w[0] == w[1] and w[2] == w[3] and w[1] != w[2]
    ref = SinusoidalLink(0.2, -0.1, delta=1e-3)
    assert w[4] == pytest.approx(omega_at(ref, 3))


def test_parse_link_grammar_round_trip():
    link = parse_link("sin:A=0.1,B=0.1,delta=0.0001,s=12")
    assert isinstance(link, SinusoidalLink) and link.s == 12
    assert parse_link(link.spec()) == link
    assert parse_link("constant:omega=0.2").omega == 0.2
    assert parse_link("constant:omega=auto").unknown == ("omega",)
    assert parse_link("sin:delta=0.001").unknown == ("A", "B")
    lg = parse_link("logistic:d0=-2,d1=0")
    assert (lg.delta0, lg.delta1) == (-2.0, 0.0)
    assert parse_link(lg.spec()) == lg
    monthly = parse_link("sinmonthly:A=auto,B=auto,weeks=53", months=[1, 2])
    assert monthly.weeks_per_year == 53 and monthly.months == (1, 2)
    for bad in ("poly:a=1", "sin:A=x", "sin:s=auto", "constant:lambda=1", "sin:A"):
        with pytest.raises(ConstraintError):
            parse_link(bad)
