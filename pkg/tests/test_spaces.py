import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hkbesov.spaces import (MAX_POINTS, ExponentError, MMSpace, SizeError, SpaceExponents,
                            build_cable_gasket, build_cycle, build_gasket, build_path, build_product,
                            doubling_check, from_edges, gasket_size, volume_growth_fit)


def test_cycle_structure():
    X = build_cycle(10, 0.5)
    assert X.n == 10 and X.edges.shape == (10, 2)
    assert X.total_mass == pytest.approx(5.0)
    assert X.diameter == pytest.approx(2.5)
    assert X.dist[0, 7] == pytest.approx(1.5)
    assert X.is_connected()


def test_path_half_mass_ends():
    X = build_path(5)
    assert X.mass.tolist() == [0.5, 1, 1, 1, 0.5]
    assert X.diameter == 4.0


@pytest.mark.parametrize("level", [1, 2, 3, 4])
def test_gasket_counts(level):
    X = build_gasket(level)
    assert X.n == gasket_size(level) == (3 ** (level + 1) + 3) // 2
    assert X.edges.shape[0] == 3 ** (level + 1)
    assert X.total_mass == pytest.approx(1.0)
    assert X.diameter == pytest.approx(1.0)


def test_gasket_blowup_doubles_diameter():
    X = build_gasket(2, blowup=2)
    assert X.diameter == pytest.approx(4.0)
    assert len(X.boundary) == 2
    assert X.total_mass == pytest.approx(9.0)
    core = X.core_mask(0.2)
    assert core.any() and not core[list(X.boundary)].any()


def test_gasket_size_limit():
    with pytest.raises(SizeError):
        build_gasket(8)
    with pytest.raises(SizeError):
        build_cycle(MAX_POINTS + 1)


def test_cable_gasket():
    X = build_cable_gasket(1, segments=4)
    assert X.n == 6 + 9 * 3
    assert X.total_mass == pytest.approx(9.0)
    assert X.min_edge == pytest.approx(0.25)
    # corners of the level-1 gasket are two unit cables apart
    assert X.dist[0, 2] == X.dist[0, 5] == X.dist[2, 5] == pytest.approx(2.0)
    assert X.diameter >= 2.0


def test_product_metric_and_measure():
    C = build_cycle(5)
    X = build_product(C, 2)
    assert X.n == 25
    # point (a, b) has index a * 5 + b
    assert X.dist[0 * 5 + 0, 2 * 5 + 3] == pytest.approx(C.dist[0, 2] + C.dist[0, 3])
    assert X.total_mass == pytest.approx(C.total_mass ** 2)
    assert X.edges.shape[0] == 2 * 5 * 5
    assert build_product(C, 1) is C


def test_from_edges_validation():
    with pytest.raises(ValueError, match="connected"):
        from_edges([[0, 1], [2, 3]], [1, 1], [1, 1], [1, 1, 1, 1])
    with pytest.raises(ValueError, match="self loops"):
        from_edges([[0, 0], [0, 1]], [1, 1], [1, 1], [1, 1])
    with pytest.raises(ValueError):
        from_edges([[0, 1]], [1], [1], [1, -1])


def test_geodesic_distance_from_lengths():
    X = from_edges([[0, 1], [1, 2], [0, 2]], [1, 1, 1], [1.0, 1.0, 5.0], [1, 1, 1])
    assert X.dist[0, 2] == pytest.approx(2.0)


def test_json_round_trip(tmp_path):
    X = build_gasket(2, blowup=1)
    p = tmp_path / "g.json"
    X.save(p)
    Y = MMSpace.load(p)
    assert np.allclose(X.dist, Y.dist)
    assert np.allclose(X.mass, Y.mass)
    assert Y.boundary == X.boundary
    with pytest.raises(ValueError):
        MMSpace.from_json({"points": [0], "mass": [1.0]})


def test_normalized_keeps_generator():
    X = build_gasket(2, blowup=1)
    Y = X.normalized()
    assert Y.total_mass == pytest.approx(1.0)
    LX = X.laplacian().toarray() / X.mass[:, None]
    LY = Y.laplacian().toarray() / Y.mass[:, None]
    assert np.allclose(LX, LY)


def test_energy_matches_laplacian():
    rng = np.random.default_rng(0)
    X = build_gasket(3)
    f = rng.normal(size=X.n)
    assert X.energy(f) == pytest.approx(f @ X.laplacian() @ f)


def test_volume_fit_cycle_slope_one():
    fit = volume_growth_fit(build_cycle(256))
    assert fit.small.available and fit.large.available
    assert fit.alpha1_hat == pytest.approx(1.0, abs=0.05)
    assert fit.alpha2_hat == pytest.approx(1.0, abs=0.05)


def test_volume_fit_gasket_dimension():
    X = build_gasket(6)
    fit = volume_growth_fit(X, r_split=1e9, r_range=(4 * X.min_edge, 0.25))
    assert fit.alpha1_hat == pytest.approx(math.log(3) / math.log(2), abs=0.15)
    assert not fit.large.available


def test_doubling_cycle():
    D, _ = doubling_check(build_cycle(64))
    assert 1.0 < D <= 3.0 + 1e-12


def test_exponents():
    e = SpaceExponents.single(1.0, 2.0, 1.0)
    assert e.beta(4.0) == pytest.approx(16.0)
    e.validate_hke()
    with pytest.raises(ExponentError, match="2≤βᵢ≤1\\+αᵢ"):
        SpaceExponents.single(1.0, 1.5, 1.0).validate_hke()
    with pytest.raises(ExponentError):
        SpaceExponents.single(1.0, -2.0, 1.0)
    assert e.with_kappa(0.5, 0.5).kappa1 == 0.5


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 40), st.floats(0.1, 3.0))
def test_cycle_metric_axioms(n, h):
    D = build_cycle(n, h).dist
    assert np.allclose(D, D.T)
    assert np.all(np.diag(D) == 0)
    assert np.all(D[:, :, None] <= D[:, None, :] + D.T[None, :, :] + 1e-12)
