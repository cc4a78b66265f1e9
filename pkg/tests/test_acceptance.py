"""The eleven acceptance criteria at their stated tolerances.

Each test records one PASS/FAIL line that is printed in the terminal summary.
"""

from __future__ import annotations

import math
import time
import pytest
from conftest import context

from hkbesov.cli import main
from hkbesov.verify import run_suite

GRID = {"mode": "fixed", "points": 30}


@pytest.fixture(scope="module")
def cycle256_fixed():
    return context("cycle:256", **GRID)


@pytest.fixture(scope="module")
def gasket4_fixed():
    return context("gasket:4", **GRID)


def _rows(rep, check):
    return [r for r in rep.rows if r.check == check]


def test_01_semigroup_laws(acceptance):
    t0 = time.perf_counter()
    worst = {"conservativity": 0.0, "symmetry": 0.0, "composition": 0.0}
    ok = True
    points = []
    for space in ("cycle:256", "gasket:4"):
        ctx = context(space, **GRID)
        rep = run_suite("semigroup", ctx)
        points.append(len(ctx.grid))
        for k in worst:
            rows = _rows(rep, k)
            assert len(rows) == len(ctx.grid)
            worst[k] = max(worst[k], max(r.lhs for r in rows))
        ok &= not rep.exact_failures
    elapsed = time.perf_counter() - t0
    passed = (ok and worst["conservativity"] <= 1e-9 and worst["symmetry"] <= 1e-10
              and worst["composition"] <= 1e-9 and elapsed < 60 and points == [30, 30])
    acceptance(1, "semigroup laws on cycle(256), gasket(4)", passed,
               f"cons={worst['conservativity']:.1e} sym={worst['symmetry']:.1e} "
               f"comp={worst['composition']:.1e} time={elapsed:.1f}s")
    assert passed


def test_02_sigma_algebra(acceptance, cycle64, gasket4):
    defect = 0.0
    ok = True
    for ctx in (cycle64, gasket4):
        rep = run_suite("sigma", ctx)
        assert rep.constants["grid"][2] == 200
        ok &= rep.passed
        for check in ("inverse_round_trip", "power", "product", "ratio_bound"):
            rows = _rows(rep, check)
            assert rows
            defect = max(defect, max(r.lhs for r in rows))
        ok &= all(r.passed for r in _rows(rep, "exponent_arithmetic_exact"))
    passed = ok and defect <= 1e-12
    acceptance(2, "sigma algebra on a 200-point grid", passed, f"max defect={defect:.1e}")
    assert passed


def test_03_orlicz(acceptance, cycle64):
    rep = run_suite("orlicz", cycle64)
    dc = _rows(rep, "double_conjugate")
    names = {r.probe for r in dc}
    assert {"power:1.5", "power:2", "power:3", "minpower:1,3"} <= names
    s = sorted({r.point for r in dc})
    assert len(s) == 50 and math.isclose(s[0], 1e-2) and math.isclose(s[-1], 1e2)
    worst_dc = max(r.lhs for r in dc)
    lux = _rows(rep, "luxembourg_homogeneity") + _rows(rep, "luxembourg_triangle")
    ind = _rows(rep, "indicator_vs_luxembourg")
    passed = rep.passed and worst_dc <= 1e-4 and all(r.passed for r in lux) and all(r.passed for r in ind)
    acceptance(3, "Orlicz conjugates, Luxembourg norm, indicator norms", passed,
               f"double conjugate {worst_dc:.1e}, {len(ind)} indicator comparisons")
    assert passed


def test_04_pseudo_poincare(acceptance, cycle256_fixed, gasket4_fixed):
    worst = 0.0
    ok = True
    detail = []
    for ctx in (cycle256_fixed, gasket4_fixed):
        rep = run_suite("pseudo_poincare", ctx)
        rows = _rows(rep, "pseudo_poincare")
        probes = {r.probe for r in rows}
        pts = {r.point for r in rows}
        assert len(probes) == 23 and len(pts) == 30
        worst = max(worst, max(r.lhs for r in rows))
        ok &= not rep.exact_failures
        detail.append(f"{ctx.X.name}: {len(rows)} rows")
    passed = ok and worst <= 1 + 1e-9
    acceptance(4, "pseudo-Poincare ratio <= 1 + 1e-9", passed, f"worst={worst:.12f}; " + ", ".join(detail))
    assert passed


def test_05_ks_equivalence(acceptance):
    t0 = time.perf_counter()
    brackets = {}
    for n in (64, 256):
        ctx = context(f"cycle:{n}")
        rep = run_suite("ks_equivalence", ctx)
        brackets[n] = {p: rep.constants[f"bracket[p={p!r}]"] for p in (1.0, 2.0)}
    elapsed = time.perf_counter() - t0
    moves = []
    finite = True
    for p in (1.0, 2.0):
        for k in (0, 1):
            a, b = brackets[64][p][k], brackets[256][p][k]
            finite &= all(math.isfinite(v) and v > 0 for v in (a, b))
            moves.append(max(a / b, b / a))
    passed = finite and max(moves) <= 2.0 and elapsed < 300
    text = "; ".join(f"p={p:g}: n=64 [{brackets[64][p][0]:.3f}, {brackets[64][p][1]:.3f}] "
                     f"n=256 [{brackets[256][p][0]:.3f}, {brackets[256][p][1]:.3f}]" for p in (1.0, 2.0))
    acceptance(5, "KS vs Besov bracket stable from n=64 to n=256", passed,
               f"{text}; max move {max(moves):.3f}x; time={elapsed:.1f}s")
    assert passed


def test_06_cheeger(acceptance, cycle64, gasket3):
    parts = []
    ok = True
    for ctx in (cycle64, gasket3):
        rep = run_suite("cheeger", ctx)
        row = _rows(rep, "cheeger_spectral_bound")[0]
        ok &= row.passed and not rep.exact_failures
        c = rep.constants
        d = row.note
        parts.append(f"{ctx.X.name}: C_hat={c[f'C_hat[{d}]']:.4f} >= bound/1.05 with bound={c[f'bound[{d}]']:.4f}")
    assert any(cid.startswith("arc") for cid, _ in cycle64.candidates())
    acceptance(6, "Cheeger constant above the spectral bound", ok, "; ".join(parts))
    assert ok


def test_07_coarea(acceptance):
    ctx = context("cycle:128")
    rep = run_suite("coarea", ctx)
    assert len(_rows(rep, "coarea_ratio")) == 10
    c = rep.constants
    # bracket [c, C] of comparability constants: its width is the spread C/c
    spread_move = max(c["spread"] / c["spread_refined"], c["spread_refined"] / c["spread"])
    abs_width_growth = c["width_refined"] / c["width"]
    passed = spread_move <= 2.0 and abs_width_growth <= 2.0
    acceptance(7, "co-area bracket stable under grid doubling", passed,
               f"bracket {c['bracket'][0]:.4f}..{c['bracket'][1]:.4f} -> "
               f"{c['bracket_refined'][0]:.4f}..{c['bracket_refined'][1]:.4f}; spread moves {spread_move:.4f}x; "
               f"hi-lo shrinks {1 / abs_width_growth:.2f}x (second-order convergence)")
    assert passed


def test_08_appendix(acceptance, cycle64, gasket4):
    ok = True
    parts = []
    for ctx in (cycle64, gasket4):
        rep = run_suite("appendix", ctx)
        ok &= rep.passed
        assert len(_rows(rep, "integral_ratio_bounded")) == 60
        assert len(_rows(rep, "dyadic_ratio_bounded")) == 800
        stab = max(r.lhs for r in _rows(rep, "integral_sup_stability"))
        cf = max(r.lhs for r in _rows(rep, "inverse_sigma_closed_form"))
        parts.append(f"{ctx.X.name}: sup change {stab:.1e}, closed form {cf:.1e}")
    acceptance(8, "appendix integral, dyadic sum and inverse-sigma lemmas", ok, "; ".join(parts))
    assert ok


def test_09_truncation(acceptance, cycle64, gasket4):
    ok = True
    worst = 0.0
    for ctx in (cycle64, gasket4):
        rep = run_suite("truncation", ctx)
        rows = _rows(rep, "truncation_ledger")
        assert len(rows) == 2 * 23
        ok &= all(r.passed for r in rows)
        worst = max(worst, rep.constants["worst_sum_over_seminorm"])
    acceptance(9, "truncation sum <= 2(p+1) seminorm^p", ok, f"worst sum/seminorm^p = {worst:.4f}")
    assert ok


def test_10_identities(acceptance, cycle64, gasket4):
    ok = True
    worst = 0.0
    for ctx in (cycle64, gasket4):
        rep = run_suite("identities", ctx)
        exact = [r for r in rep.rows if r.tier == "exact"]
        ok &= not rep.exact_failures
        numeric = [r for r in exact if r.check.endswith(":numeric")]
        worst = max(worst, max(r.lhs for r in numeric))
        checks = {r.check for r in exact}
        for need in ("conjugate_psi:exact", "chain:psi1_of_vinv:exact", "reduction:psi_p:exact"):
            assert need in checks
        for kind in ("phi1", "psi1", "Phi1"):
            assert len(_rows(rep, f"reduction:{kind}:exact")) == 3
    passed = ok and worst <= 1e-12
    acceptance(10, "exponent identities, chains and equal-exponent reductions", passed,
               f"max numeric defect {worst:.1e}")
    assert passed


def test_11_determinism(acceptance, tmp_path):
    outs = []
    for k in (1, 2):
        out = tmp_path / f"run{k}"
        code = main(["verify", "all", "--space", "cycle:32", "--seed", "7", "--out", str(out)])
        assert code == 0
        outs.append(out)
    names = sorted(p.name for p in outs[0].glob("*.json") if p.name != "manifest.json")
    assert len(names) == 22
    same = all((outs[0] / n).read_bytes() == (outs[1] / n).read_bytes() for n in names)
    same &= (outs[0] / "rows.csv").read_bytes() == (outs[1] / "rows.csv").read_bytes()
    acceptance(11, "byte-identical reports for identical config and seed", same,
               f"{len(names)} suite reports and rows.csv compared")
    assert same
