import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg

from hkbesov.heat import (hke_fit, kernel_slice_csv, spectral_decompose, spectrum_csv,
                          ultracontractivity_profile, wbe_estimate)
from hkbesov.scale import TwoScaleFn
from hkbesov.spaces import build_cycle, build_gasket, build_product


@pytest.fixture(scope="module")
def cyc():
    return spectral_decompose(build_cycle(32))


@pytest.fixture(scope="module")
def gas():
    return spectral_decompose(build_gasket(3, blowup=1))


def test_cycle_spectrum(cyc):
    k = np.arange(32)
    expected = np.sort(2 - 2 * np.cos(2 * np.pi * k / 32))
    assert np.allclose(cyc.eigenvalues, expected, atol=1e-12)
    assert cyc.spectral_gap == pytest.approx(2 - 2 * math.cos(2 * math.pi / 32))


@pytest.mark.parametrize("t", [0.1, 1.0, 25.0])
def test_cycle_kernel_fourier(cyc, t):
    n = 32
    k = np.arange(n)
    d = np.arange(n)
    lam = 2 - 2 * np.cos(2 * np.pi * k / n)
    row = np.array([np.mean(np.exp(-lam * t) * np.cos(2 * np.pi * k * j / n)) for j in d])
    assert np.allclose(cyc.kernel(t)[0], row, atol=1e-13)


@pytest.mark.parametrize("t", [0.01, 0.5, 4.0])
def test_kernel_matches_matrix_exponential(gas, t):
    X = gas.space
    L = X.laplacian().toarray() / X.mass[:, None]
    P = linalg.expm(-t * L)  # transition matrix P_t(x, y) = p_t(x, y) mu_y
    assert np.allclose(gas.kernel(t) * X.mass[None, :], P, atol=1e-11)


def test_semigroup_properties(gas):
    m = gas.mass
    for t in (0.05, 1.0, 10.0):
        P = gas.kernel(t)
        assert np.allclose(P @ m, 1.0, atol=1e-10)
        assert np.allclose(P, P.T, atol=1e-12)
        assert P.min() >= 0
    s, t = 0.3, 0.9
    comp = gas.kernel(s) @ (m[:, None] * gas.kernel(t))
    assert np.allclose(comp, gas.kernel(s + t), atol=1e-10)


def test_apply_matches_kernel(gas):
    rng = np.random.default_rng(3)
    f = rng.normal(size=(gas.n, 4))
    t = 0.7
    assert np.allclose(gas.apply(t, f), gas.kernel(t) @ (gas.mass[:, None] * f), atol=1e-12)
    assert np.allclose(gas.apply(0.0, f), f)
    with pytest.raises(ValueError):
        gas.kernel(0.0)


def test_orthonormal(gas):
    assert gas.orthonormality_defect() < 1e-10


def test_product_kernel_factorizes():
    C = build_cycle(6)
    HC, HX = spectral_decompose(C), spectral_decompose(build_product(C, 2))
    t = 0.8
    assert np.allclose(HX.kernel(t), np.kron(HC.kernel(t), HC.kernel(t)), atol=1e-12)


def test_ultracontractivity_profile(cyc):
    ts = np.logspace(-2, 3, 40)
    V = ultracontractivity_profile(cyc, ts)
    assert V.monotone_defect == 0.0
    assert V.V[-1] == pytest.approx(32.0, rel=1e-6)
    assert V(1e-5) == V.V[0] and V(1e9) == V.V[-1]
    # generalized inverse: smallest grid time where V exceeds y
    y = V.V[10]
    assert V.inverse(y) == ts[11]
    assert V.inverse(1e9) == math.inf


def test_hke_fit_cycle_slope():
    H = spectral_decompose(build_cycle(256))
    ts = np.logspace(0, 3, 31)
    fit = hke_fit(H, ts, beta=TwoScaleFn(2, 2), alpha=TwoScaleFn(1, 1), t_break=1e6)
    assert fit.slope == pytest.approx(-0.5, abs=0.05)
    assert fit.beta_hat[0] == pytest.approx(2.0, abs=0.2)
    assert fit.c_lower <= fit.c_upper


def test_hke_fit_rejects_short_grid(cyc):
    with pytest.raises(ValueError):
        hke_fit(cyc, np.logspace(0, 1, 10))


def test_wbe_estimate_finite(cyc):
    rng = np.random.default_rng(0)
    F = rng.normal(size=(32, 3))
    F[:, 0] = 1.0
    est = wbe_estimate(cyc, F, np.logspace(-1, 2, 10), TwoScaleFn(1, 1), TwoScaleFn(2, 2))
    assert est.per_probe[0] < 1e-10  # constants are harmonic up to roundoff
    assert 0 < est.constant < math.inf


def test_csv_exports(cyc):
    lines = spectrum_csv(cyc).splitlines()
    assert lines[0] == "k,lambda" and len(lines) == 33
    rows = kernel_slice_csv(cyc, 1.0, 0).splitlines()
    assert rows[0] == "y,dist,p_t" and len(rows) == 33


@settings(max_examples=20, deadline=None)
@given(st.floats(1e-3, 50.0), st.integers(0, 31))
def test_kernel_probability_row(t, x):
    H = _CYC
    row = H.kernel(t)[x] * H.mass
    assert row.min() >= 0
    assert row.sum() == pytest.approx(1.0, abs=1e-10)


_CYC = spectral_decompose(build_cycle(32))
