from fractions import Fraction

import numpy as np
import pytest
from conftest import context
from hypothesis import given, settings
from hypothesis import strategies as st

from hkbesov.config import RunConfig
from hkbesov.heat import ultracontractivity_profile
from hkbesov.orlicz import Power
from hkbesov.scale import TwoScaleFn
from hkbesov.spaces import SpaceExponents
from hkbesov.verify import (SUITE_FUNCS, big_phi_one, build_context, embedding_admissibility,
                            isoperimetric_general, orlicz_sobolev_hypothesis, phi_one, psi_one,
                            psi_one_bracket, psi_p, run_suite, run_suites, truncation_sum)

CYCLE = SpaceExponents.single(1.0, 2.0, 1.0)
TWO = SpaceExponents(1.0, 2.0, 2.0, 3.0, 1.5, 2.5)


@pytest.fixture(scope="module")
def small():
    return context("cycle:32")


def test_psi_p_exponents():
    assert psi_p(CYCLE, 2) == TwoScaleFn(Fraction(1, 2), Fraction(1, 2))
    assert psi_one(CYCLE) == TwoScaleFn(Fraction(1, 2), Fraction(1, 2))
    # (1 - 2/p) k/b + 1/p with k/b = 3/4, 5/6 at p = 4
    assert psi_p(TWO, 4) == TwoScaleFn(Fraction(1, 2) * Fraction(3, 4) + Fraction(1, 4),
                                       Fraction(1, 2) * Fraction(5, 6) + Fraction(1, 4))


def test_phi_one_regime_order():
    # e1 = 1/(1-2+1.5) = 2, e2 = 2/(2-3+2.5) = 4/3
    assert phi_one(TWO, label_order=True) == TwoScaleFn(2, Fraction(4, 3))
    f = phi_one(TWO)
    assert f == TwoScaleFn(Fraction(4, 3), 2)
    # small sets mean large arguments, which must carry the small-scale exponent
    assert f.a_large == 2
    assert psi_one_bracket(TWO) == TwoScaleFn(Fraction(4, 1), Fraction(2, 1))
    assert big_phi_one(TWO) == TwoScaleFn(Fraction(1, 2), Fraction(3, 4))


def test_embedding_admissibility():
    assert embedding_admissibility(TWO) == []
    bad = embedding_admissibility(CYCLE)
    assert len(bad) == 2 and all("must exceed" in b for b in bad)
    assert any("below" in b for b in embedding_admissibility(SpaceExponents.single(1.0, 2.0, 2.5)))


def test_context_normalized_heat(small):
    assert small.Hn.space.total_mass == pytest.approx(1.0)
    assert np.allclose(small.Hn.eigenvalues, small.H.eigenvalues)
    assert small.is_cycle and len(small.probes) == 23


def test_fixed_grid_mode():
    ctx = context("cycle:32", mode="fixed", points=30)
    assert len(ctx.grid) == 30


def test_suite_registry_complete():
    from hkbesov.config import SUITES
    assert set(SUITE_FUNCS) == set(SUITES)


def test_run_suites_callback_order(small):
    seen = []
    cfg = RunConfig(space="cycle:32", suites=["volume", "sigma"])
    reps = run_suites(cfg, ctx=small, on_done=lambda r: seen.append(r.suite))
    assert seen == ["volume", "sigma"] == [r.suite for r in reps]


@pytest.mark.parametrize("suite", ["semigroup", "limsup", "var_properties", "weak_monotonicity",
                                   "pseudo_poincare_psi", "continuity", "volume", "wbe"])
def test_exact_tier_clean_on_cycle(small, suite):
    rep = run_suite(suite, small)
    assert rep.rows
    assert not rep.exact_failures, rep.exact_failures[:3]


def test_embedding_skips_inadmissible(small):
    rep = run_suite("embedding", small)
    assert [(r.check, r.tier) for r in rep.rows] == [("admissibility", "empirical")]
    assert rep.rows[0].note.startswith("skipped:")
    assert any("inadmissible" in n for n in rep.notes)


def test_embedding_runs_on_product():
    ctx = context("cycle:8^2")
    rep = run_suite("embedding", ctx)
    assert len(rep.rows) > 10 and not rep.exact_failures


def test_isoperimetric_proof_form_holds_stated_form_does_not(small):
    V = ultracontractivity_profile(small.Hn, small.grid.t)
    h = small.hs[0]
    stated, proof = [], []
    for cid, E in small.candidates():
        if not cid.startswith("arc"):
            continue
        r = isoperimetric_general(np.asarray(E, bool), h, V, small.Hn, small.grid)
        stated.append(r.lhs / r.perimeter)
        proof.append(r.lhs_proof / r.perimeter)
    assert len(proof) == 31
    assert max(proof) <= 1 + 1e-9
    # with constant 1 the profile overshoots the perimeter on a finite probability space
    assert max(stated) > 1.05


def test_truncation_sum_bound_on_probes(small):
    F = small.probes.fields
    for p in (1.0, 2.0):
        total, base = truncation_sum(F, p, small.hs[0], small.H, small.grid)
        assert np.all(total <= 2 * (p + 1) * base + 1e-9)


def test_orlicz_sobolev_hypothesis_finite(small):
    V = ultracontractivity_profile(small.Hn, small.grid.t)
    s, ratios = orlicz_sobolev_hypothesis(small.hs[0], Power(2.0), V, 2.0)
    assert np.all(np.isfinite(ratios)) and np.all(ratios > 0)
    assert s[-1] < V.V.max()


@settings(max_examples=25, deadline=None)
@given(st.floats(0.5, 3), st.floats(2.0, 4.0), st.floats(0.05, 0.95))
def test_phi_one_inverse_chain(a, b, frac):
    # admissible kappa between b - a and b; s * phi1^{-1}(1/s) matches psi1 bracket ratio form
    b = max(b, 1.0 + 1e-3)
    k = (b - a) + frac * min(a, b) if b - a > 0 else frac * b
    if not (max(b - a, 0) < k < b):
        return
    e = SpaceExponents.single(a, b, k)
    f = phi_one(e)
    g = psi_one_bracket(e)
    # single regime: phi1 = s^{a/(a-b+k)}, s phi1^{-1}(1/s) = s^{1 - (a-b+k)/a}
    x = np.geomspace(1e-3, 1e3, 7)
    chain = x * f.inverse()(1.0 / x)
    assert np.allclose(chain, x ** (1 - (a - b + k) / a), rtol=1e-10)
    assert float(g.a_small) == pytest.approx(a / (b - k))


def test_build_context_rejects_bad_config():
    from hkbesov.config import ConfigError
    with pytest.raises(ConfigError):
        build_context(RunConfig.from_dict({"space": "cycle:2"}))
