import numpy as np
import pytest

from hkbesov.besov_bv import TGrid
from hkbesov.heat import spectral_decompose
from hkbesov.ks import RGrid, equivalence_check, ks_energy, ks_seminorm
from hkbesov.probes import probe_family
from hkbesov.scale import TwoScaleFn
from hkbesov.spaces import build_cycle, build_gasket


def _brute(X, f, p, psi, r):
    total = 0.0
    for y in range(X.n):
        ball = X.dist[y] < r
        avg = np.sum(X.mass[ball] * np.abs(f[ball] - f[y]) ** p) / X.mass[ball].sum()
        total += X.mass[y] * avg
    return total / psi(r) ** p


@pytest.mark.parametrize("p", [1.0, 2.0])
@pytest.mark.parametrize("r", [1.5, 3.2, 7.0])
def test_ks_energy_brute_force(p, r):
    X = build_cycle(20)
    rng = np.random.default_rng(0)
    f = rng.normal(size=20)
    psi = TwoScaleFn(1.0, 1.0)
    assert ks_energy(X, f, p, psi, r).value[0] == pytest.approx(_brute(X, f, p, psi, r), rel=1e-12)


def test_ks_energy_degenerate_radius():
    X = build_cycle(10)
    e = ks_energy(X, np.arange(10.0), 2.0, TwoScaleFn(1, 1), 0.5)
    assert e.degenerate and e.value[0] == 0.0
    with pytest.raises(ValueError):
        ks_energy(X, np.zeros(10), 0.5, TwoScaleFn(1, 1), 1.0)


def test_ks_energy_mask_counts_empty():
    X = build_cycle(10)
    mask = np.zeros(10, bool)
    mask[:4] = True
    e = ks_energy(X, np.arange(10.0), 1.0, TwoScaleFn(1, 1), 2.0, mask=mask)
    assert e.empty_balls == 6


def test_ks_seminorm_sup_over_grid():
    X = build_cycle(16)
    f = np.cos(2 * np.pi * np.arange(16) / 16)
    g = RGrid.log(1.5, 8.0, 12)
    val, arg = ks_seminorm(X, f, 2.0, TwoScaleFn(1, 1), g)
    direct = max(ks_energy(X, f, 2.0, TwoScaleFn(1, 1), r).value[0] for r in g.r) ** 0.5
    assert val == pytest.approx(direct)
    assert arg in g.r


def test_rgrid_coupled_to_time_grid():
    X = build_cycle(64)
    tg = TGrid.log(0.1, 1e4)
    rg = RGrid.coupled(tg, TwoScaleFn(2, 2), X)
    assert np.all(rg.r > X.min_distance) and np.all(rg.r <= X.diameter)
    r = np.sqrt(tg.t)
    assert np.allclose(rg.r, r[(r > 1.0) & (r <= 32.0)])
    with pytest.raises(ValueError):
        RGrid(np.array([2.0, 1.0]))
    with pytest.raises(ValueError):
        RGrid.log(0.1, 1.0).validate_for(X)


def test_equivalence_bracket_finite():
    H = spectral_decompose(build_gasket(3))
    P = probe_family(H)
    res = equivalence_check(P.fields, 2.0, TwoScaleFn(0.5, 0.5), TwoScaleFn(2.3, 2.3), H,
                            TGrid.spanning(H), ids=P.ids)
    assert 0 < res.ratio_low <= res.ratio_high < np.inf
    assert res.spread >= 1
    assert not res.excluded


def test_equivalence_excludes_constants():
    H = spectral_decompose(build_cycle(16))
    F = np.stack([np.ones(16), np.cos(2 * np.pi * np.arange(16) / 16)], axis=1)
    res = equivalence_check(F, 1.0, TwoScaleFn(0.5, 0.5), TwoScaleFn(2, 2), H, TGrid.spanning(H),
                            ids=["const", "cos"])
    assert res.excluded == ["const"]
    assert np.isnan(res.ratios[0])
