"""Command line entry point: ``hkbesov <command> ...``.

Exit status: 0 on success, 1 when an exact-tier check fails, 2 on an
invalid configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .besov_bv import besov_seminorm, scale_descriptor
from .config import SUITES, ConfigError, GridConfig, RunConfig, parse_sigma, parse_space, parse_young
from .heat import kernel_slice_csv, spectrum_csv
from .ks import RGrid, ks_seminorm
from .orlicz import MeasureVector, luxembourg_norm
from .report import dumps, merge_reports, rows_csv
from .spaces import volume_growth_fit
from .verify import build_context, run_suites

__all__ = ["main", "build_parser", "load_config"]


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--space", help="space descriptor, e.g. cycle:64, gasket:4, cycle:32^2 or a JSON file")
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--seed", type=int, help="probe seed")
    p.add_argument("--out", help="output file or directory")
    p.add_argument("--slack", type=float, help="discretization factor for bound-tier checks")
    p.add_argument("--exponents", help="comma list of key=value, keys alpha1..kappa2")
    p.add_argument("--assert-hke", action="store_true", help="reject exponents outside 2<=beta_i<=1+alpha_i")
    p.add_argument("--grid", choices=("span", "fixed"), help="time grid mode")
    p.add_argument("--points", type=int, help="points of a fixed time grid")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hkbesov", description="Heat-kernel Besov and BV diagnostics on finite spaces.")
    ap.add_argument("--version", action="version", version=f"hkbesov {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("space", help="build or describe a space")
    sp.add_argument("action", choices=("build", "describe"))
    _common(sp)

    hp = sub.add_parser("heat", help="spectrum or kernel slices")
    hp.add_argument("action", choices=("spectrum", "kernel"))
    hp.add_argument("--t", type=float, default=1.0, help="time for kernel slices")
    hp.add_argument("--x", type=int, default=0, help="base point for kernel slices")
    _common(hp)

    np_ = sub.add_parser("norms", help="seminorms and Orlicz norms of the probe family")
    np_.add_argument("kind", choices=("besov", "ks", "orlicz"))
    np_.add_argument("--besov", nargs="*", default=None, metavar="KEY=VALUE",
                     help="p=<p> h=sigma:a,b (besov) or p=<p> nu=sigma:a,b (ks)")
    np_.add_argument("--young", help="Young function for orlicz, e.g. power:2")
    _common(np_)

    vp = sub.add_parser("verify", help="run verification suites")
    vp.add_argument("target", nargs="?", default=None, help="suite name or 'all'")
    vp.add_argument("--suite", action="append", help="suite name (repeatable)")
    _common(vp)

    rp = sub.add_parser("report", help="merge suite reports")
    rp.add_argument("action", choices=("merge",))
    rp.add_argument("files", nargs="+")
    rp.add_argument("--out", help="merged JSON path (default stdout)")
    return ap


def _kv(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"expected key=value, got {item!r}")
        out[key.strip()] = val.strip()
    return out


def load_config(args) -> RunConfig:
    """Config file (if any) overridden by explicit flags, then validated."""
    data = {}
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
    for key in ("space", "seed", "slack"):
        v = getattr(args, key, None)
        if v is not None:
            data[key] = v
    if getattr(args, "assert_hke", False):
        data["assert_hke"] = True
    if getattr(args, "exponents", None):
        try:
            data["exponents"] = {k: float(v) for k, v in _kv(args.exponents.split(",")).items()}
        except ValueError as exc:
            raise ConfigError(f"malformed exponents {args.exponents!r}") from exc
    grid = dict(data.get("grid", {}))
    if getattr(args, "grid", None):
        grid["mode"] = args.grid
    if getattr(args, "points", None):
        grid["points"] = args.points
    if grid:
        data["grid"] = grid
    suites = []
    if getattr(args, "target", None):
        suites.append(args.target)
    suites.extend(getattr(args, "suite", None) or [])
    if suites:
        data["suites"] = suites
    return RunConfig.from_dict(data)


def _emit(text: str, out) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_space(args, cfg: RunConfig) -> int:
    X = parse_space(cfg.space)
    if args.action == "build":
        _emit(json.dumps(X.to_json(), indent=1) + "\n", args.out)
        return 0
    try:
        fit = volume_growth_fit(X)
        slopes = [fit.alpha1_hat, fit.alpha2_hat]
    except ValueError:
        # too few scales between twice the smallest edge and half the diameter
        slopes = [None, None]
    desc = {"name": X.name, "points": X.n, "edges": int(X.edges.shape[0]), "total_mass": X.total_mass,
            "diameter": X.diameter, "min_edge": X.min_edge, "connected": X.is_connected(),
            "boundary_points": len(X.boundary), "volume_slopes": slopes,
            "exponents": cfg.resolved_exponents().as_dict()}
    _emit(dumps(desc), args.out)
    return 0


def cmd_heat(args, cfg: RunConfig) -> int:
    ctx = build_context(cfg)
    if args.action == "spectrum":
        _emit(spectrum_csv(ctx.H), args.out)
    else:
        if not 0 <= args.x < ctx.X.n:
            raise ConfigError(f"--x must lie in [0, {ctx.X.n})")
        if not args.t > 0:
            raise ConfigError("--t must be positive")
        _emit(kernel_slice_csv(ctx.H, args.t, args.x), args.out)
    return 0


def cmd_norms(args, cfg: RunConfig) -> int:
    ctx = build_context(cfg)
    opts = _kv(args.besov)
    bad = sorted(set(opts) - {"p", "h", "nu"})
    if bad:
        raise ConfigError(f"unknown norm options: {', '.join(bad)}")
    try:
        p = float(opts.get("p", cfg.besov_p[0]))
    except ValueError as exc:
        raise ConfigError(f"bad p {opts['p']!r}") from exc
    if p < 1:
        raise ConfigError("p must be >= 1")
    F, ids = ctx.probes.fields, ctx.probes.ids
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if args.kind == "besov":
        h = parse_sigma(opts.get("h", cfg.besov_h[0]))
        res = besov_seminorm(F, p, h, ctx.H, ctx.grid)
        w.writerow(["probe", "p", "h", "seminorm", "argmax_t"])
        for j, pid in enumerate(ids):
            w.writerow([pid, repr(p), scale_descriptor(h), repr(float(res.value[j])), repr(float(res.argmax_t[j]))])
    elif args.kind == "ks":
        nu = parse_sigma(opts.get("nu", cfg.ks_nu))
        beta = ctx.exps.beta
        psi = type(nu)(nu.a_small * beta.a_small, nu.a_large * beta.a_large)
        rg = RGrid.coupled(ctx.grid, beta, ctx.X)
        val, arg = ks_seminorm(ctx.X, F, p, psi, rg, ctx.mask)
        w.writerow(["probe", "p", "psi", "ks_seminorm", "argmax_r"])
        for j, pid in enumerate(ids):
            w.writerow([pid, repr(p), psi.descriptor(), repr(float(val[j])), repr(float(arg[j]))])
    else:
        phi = parse_young(args.young or cfg.young)
        w.writerow(["probe", "young", "luxembourg_norm"])
        for j, pid in enumerate(ids):
            n = luxembourg_norm(MeasureVector(F[:, j], ctx.H.mass), phi)
            w.writerow([pid, phi.descriptor(), repr(n)])
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_verify(args, cfg: RunConfig) -> int:
    out = Path(args.out or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    timing = {}
    last = [t0]

    def done(rep):
        now = time.perf_counter()
        timing[rep.suite] = now - last[0]
        last[0] = now
        (out / f"{rep.suite}.json").write_text(dumps(rep.to_dict()))
        s = rep.to_dict()["summary"]
        print(f"{rep.suite:22s} rows={s['rows']:6d} failed={s['failed']:5d} exact_failed={s['exact_failed']:4d}")

    reports = run_suites(cfg, on_done=done)
    (out / "rows.csv").write_text(rows_csv(reports))
    exact_failed = sum(len(r.exact_failures) for r in reports)
    manifest = {
        "version": __version__, "python": platform.python_version(), "numpy": np.__version__,
        "scipy": scipy.__version__, "platform": platform.platform(), "seed": cfg.seed,
        "config": cfg.to_dict(), "suites": [r.suite for r in reports], "timing_s": timing,
        "total_s": time.perf_counter() - t0, "exact_failed": exact_failed,
    }
    (out / "manifest.json").write_text(dumps(manifest))
    return 1 if exact_failed else 0


def cmd_report(args) -> int:
    docs = []
    for f in args.files:
        try:
            doc = json.loads(Path(f).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read report {f}: {exc}") from exc
        if isinstance(doc, dict) and "timing_s" in doc and "rows" not in doc:
            # the run manifest written next to the suite reports
            print(f"skipping manifest {f}", file=sys.stderr)
            continue
        docs.append(doc)
    if not docs:
        raise ConfigError("no suite reports given")
    try:
        merged = merge_reports(docs)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"not a suite report: {exc}") from exc
    _emit(dumps(merged), args.out)
    return 1 if merged["summary"]["exact_failed"] else 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "report":
            return cmd_report(args)
        cfg = load_config(args)
        return {"space": cmd_space, "heat": cmd_heat, "norms": cmd_norms, "verify": cmd_verify}[args.command](args, cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
