import csv
import io
import json

import pytest

from hkbesov.cli import build_parser, load_config, main
from hkbesov.spaces import build_gasket, volume_growth_fit


def _csv(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def test_verify_writes_reports_and_manifest(tmp_path, capsys):
    out = tmp_path / "v"
    assert main(["verify", "sigma", "--suite", "volume", "--space", "cycle:16", "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["manifest.json", "rows.csv", "sigma.json", "volume.json"]
    man = json.loads((out / "manifest.json").read_text())
    assert man["suites"] == ["sigma", "volume"] and man["exact_failed"] == 0
    assert set(man["timing_s"]) == {"sigma", "volume"}
    assert "sigma" in capsys.readouterr().out


def test_assert_hke_rejects_exponents(capsys):
    code = main(["verify", "sigma", "--space", "cycle:16", "--exponents", "beta1=1.5", "--assert-hke"])
    assert code == 2
    assert "2≤βᵢ≤1+αᵢ" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["verify", "nope", "--space", "cycle:16"],
    ["verify", "sigma", "--space", "torus:3"],
    ["verify", "sigma", "--exponents", "beta1"],
    ["norms", "besov", "--space", "cycle:16", "--besov", "q=2"],
    ["norms", "besov", "--space", "cycle:16", "--besov", "p=0.5"],
    ["heat", "kernel", "--space", "cycle:16", "--x", "99"],
])
def test_bad_input_exits_2(argv, capsys):
    assert main(argv) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_config_file_unknown_key(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"space": "cycle:16", "colour": "red"}))
    assert main(["verify", "sigma", "--config", str(p)]) == 2


def test_flags_override_config_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"space": "cycle:16", "seed": 3, "grid": {"mode": "fixed", "points": 20}}))
    args = build_parser().parse_args(["verify", "sigma", "--config", str(p), "--seed", "9", "--points", "30"])
    cfg = load_config(args)
    assert cfg.seed == 9 and cfg.space == "cycle:16"
    assert cfg.grid.mode == "fixed" and cfg.grid.points == 30


def test_space_build_and_describe(tmp_path):
    built = tmp_path / "g.json"
    assert main(["space", "build", "--space", "gasket:2", "--out", str(built)]) == 0
    desc = tmp_path / "d.json"
    assert main(["space", "describe", "--space", str(built), "--out", str(desc)]) == 0
    d = json.loads(desc.read_text())
    assert d["points"] == 15 and d["connected"] and d["total_mass"] == pytest.approx(1.0)
    # no radius window between 2 * min_edge and diameter / 2 at this level
    assert d["volume_slopes"] == [None, None]
    assert main(["space", "describe", "--space", "gasket:4", "--out", str(desc)]) == 0
    fit = volume_growth_fit(build_gasket(4))
    assert json.loads(desc.read_text())["volume_slopes"] == pytest.approx([fit.alpha1_hat, fit.alpha2_hat])


def test_heat_exports(tmp_path):
    spec = tmp_path / "s.csv"
    assert main(["heat", "spectrum", "--space", "cycle:16", "--out", str(spec)]) == 0
    rows = _csv(spec)
    assert len(rows) == 16
    ker = tmp_path / "k.csv"
    assert main(["heat", "kernel", "--space", "cycle:16", "--t", "2", "--x", "3", "--out", str(ker)]) == 0
    assert len(_csv(ker)) == 16


@pytest.mark.parametrize("kind,extra,col", [
    ("besov", ["--besov", "p=2", "h=sigma:0.5"], "seminorm"),
    ("ks", ["--besov", "p=1"], "ks_seminorm"),
    ("orlicz", ["--young", "power:2"], "luxembourg_norm"),
])
def test_norms_csv(tmp_path, kind, extra, col):
    out = tmp_path / f"{kind}.csv"
    assert main(["norms", kind, "--space", "cycle:32", "--out", str(out), *extra]) == 0
    rows = _csv(out)
    assert len(rows) == 23
    vals = [float(r[col]) for r in rows]
    assert all(v >= 0 for v in vals) and max(vals) > 0


def test_report_merge(tmp_path):
    out = tmp_path / "v"
    assert main(["verify", "sigma", "--suite", "volume", "--space", "cycle:16", "--out", str(out)]) == 0
    merged = tmp_path / "m.json"
    files = [str(out / "sigma.json"), str(out / "volume.json")]
    assert main(["report", "merge", *files, "--out", str(merged)]) == 0
    m = json.loads(merged.read_text())
    assert m["summary"]["suites"] == 2 and m["summary"]["exact_failed"] == 0
    # a directory glob also matches the manifest, which is skipped
    assert main(["report", "merge", *sorted(map(str, out.glob("*.json"))), "--out", str(merged)]) == 0
    assert json.loads(merged.read_text())["summary"]["suites"] == 2
    assert main(["report", "merge", str(out / "manifest.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("[]")
    assert main(["report", "merge", str(bad)]) == 2
