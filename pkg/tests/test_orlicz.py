import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hkbesov.orlicz import (MeasureVector, Power, Tabulated, Threshold, TwoScalePower,
                            doubling_constant, doubling_report, generalized_inverse,
                            indicator_norm, luxembourg_norm, minpower, young_conjugate,
                            young_pair_check)

S = np.logspace(-3, 3, 61)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_power_conjugate_closed_form(p):
    # sup_s (s t - s^p) = (p-1) p^{-q} t^q with q = p/(p-1)
    q = p / (p - 1)
    t = np.logspace(-2, 2, 9)
    exact = (p - 1) * p ** (-q) * t ** q
    assert np.allclose(Power(p).conjugate()(t), exact, rtol=1e-12)
    assert np.allclose(young_conjugate(Power(p), t), exact, rtol=1e-8)


def test_power_one_conjugate_is_threshold():
    c = Power(1.0).conjugate()
    assert isinstance(c, Threshold)
    assert c(0.5) == 0.0 and c(2.0) == math.inf
    assert c.conjugate() == Power(1.0, 1.0)


@pytest.mark.parametrize("phi", [Power(2.0), Power(3.0), TwoScalePower(2.0, 3.0), minpower(1.0, 3.0)])
def test_double_conjugate_recovers(phi):
    s = np.logspace(-1, 1, 9)
    back = phi.conjugate().conjugate()(s)
    assert np.allclose(back, phi(s), rtol=1e-4)


def test_minpower_convex_minorant():
    phi = minpower(1.0, 3.0)
    s = np.linspace(0, 4, 401)
    raw = np.minimum(s, s ** 3)
    v = phi(s)
    assert np.all(v <= raw + 1e-12)
    assert np.all(np.diff(v, 2) >= -1e-10)
    # minorant of s^3 ∧ s: tangent from the origin side meets the unit slope line
    assert phi.adjustment > 0
    assert phi.descriptor() == "minpower:1.0,3.0"


def test_minpower_rejects_bad_order():
    with pytest.raises(ValueError):
        minpower(3.0, 1.0)


def test_twoscale_convex_case_is_exact():
    phi = TwoScalePower(2.0, 3.0)
    assert not phi.convexified and phi.adjustment == 0.0
    assert phi(0.5) == pytest.approx(0.25)
    assert phi(2.0) == pytest.approx(8.0)
    assert phi.inverse(8.0) == pytest.approx(2.0)


def test_generalized_inverse_vector_and_scalar():
    phi = Power(2.0)
    y = np.array([0.25, 1.0, 9.0, math.inf])
    out = generalized_inverse(phi, y)
    assert np.allclose(out[:3], [0.5, 1.0, 3.0], rtol=1e-11)
    assert out[3] == math.inf
    assert generalized_inverse(phi, 4.0) == pytest.approx(2.0, rel=1e-11)
    with pytest.raises(ValueError):
        generalized_inverse(phi, -1.0)


def test_generalized_inverse_flat_piece():
    # Tabulated flat segment: sup{s : phi(s) <= y} lands at the right end
    phi = Tabulated(np.array([1.0, 2.0, 3.0]), np.array([0.0, 0.0, 1.0]))
    assert generalized_inverse(phi, 0.0) == pytest.approx(2.0, rel=1e-10)


def test_doubling():
    assert doubling_constant(Power(3.0), S) == pytest.approx(8.0)
    rep = doubling_report(TwoScalePower(2.0, 3.0), S)
    assert rep.constant == pytest.approx(8.0)
    assert not rep.growing


def test_doubling_detects_exponential():
    class Exp(Power):
        def _eval(self, s):
            return np.expm1(s)

    rep = doubling_report(Exp(1.0), np.linspace(1, 300, 100))
    assert rep.growing


def test_luxembourg_power_is_lp_norm():
    rng = np.random.default_rng(1)
    f = MeasureVector(rng.normal(size=50), rng.uniform(0.1, 1, size=50))
    for p in (1.0, 2.0, 3.5):
        lp = np.sum(np.abs(f.values) ** p * f.masses) ** (1 / p)
        assert luxembourg_norm(f, Power(p)) == pytest.approx(lp, rel=1e-9)


def test_luxembourg_zero_vector():
    assert luxembourg_norm(MeasureVector(np.zeros(3), np.ones(3)), Power(2)) == 0.0


def test_measure_vector_validation():
    with pytest.raises(ValueError):
        MeasureVector(np.ones(2), np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        MeasureVector(np.array([1.0, math.nan]), np.ones(2))


def test_indicator_norm_power():
    # mass * (1/mass)^{1/p} = mass^{1 - 1/p}
    assert indicator_norm(0.3, Power(2.0)) == pytest.approx(0.3 ** 0.5, rel=1e-12)
    assert indicator_norm(4.0, Power(4.0)) == pytest.approx(4.0 ** 0.75, rel=1e-12)
    with pytest.raises(ValueError):
        indicator_norm(0.0, Power(2.0))


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_young_pair_for_conjugate_powers(p):
    chk = young_pair_check(Power(p), Power(p).conjugate(), S)
    assert chk.holds or chk.max_defect < 1e-12


def test_young_pair_detects_failure():
    chk = young_pair_check(Power(2.0), Power(2.0), S)
    assert not chk.holds


def test_power_validation():
    with pytest.raises(ValueError):
        Power(0.5)
    with pytest.raises(ValueError):
        Power(2.0)(-1.0)


values = st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=20)


@settings(max_examples=40, deadline=None)
@given(values, st.floats(0.1, 10), st.sampled_from([1.0, 1.5, 2.0, 3.0]))
def test_luxembourg_homogeneous(v, c, p):
    f = MeasureVector(np.array(v), np.ones(len(v)))
    n = luxembourg_norm(f, Power(p))
    assert luxembourg_norm(f.scaled(c), Power(p)) == pytest.approx(c * n, rel=1e-9, abs=1e-300)


@settings(max_examples=40, deadline=None)
@given(values, values, st.sampled_from([Power(2.0), TwoScalePower(2.0, 3.0), minpower(1.0, 2.0)]))
def test_luxembourg_triangle(u, v, phi):
    m = min(len(u), len(v))
    a, b = np.array(u[:m]), np.array(v[:m])
    w = np.full(m, 0.5)
    lhs = luxembourg_norm(MeasureVector(a + b, w), phi)
    rhs = luxembourg_norm(MeasureVector(a, w), phi) + luxembourg_norm(MeasureVector(b, w), phi)
    assert lhs <= rhs * (1 + 1e-9) + 1e-300


@settings(max_examples=40, deadline=None)
@given(st.floats(1.0, 4.0), st.floats(1e-6, 1e6))
def test_inverse_round_trip(p, y):
    phi = TwoScalePower(p, p + 0.5)
    s = generalized_inverse(phi, y)
    assert phi(s) == pytest.approx(y, rel=1e-9)
