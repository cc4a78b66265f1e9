"""Run configuration and the string descriptors used on the command line."""

from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

from .orlicz import Power, TwoScalePower, YoungFunction, minpower
from .scale import TwoScaleFn
from .spaces import (ExponentError, MMSpace, SpaceExponents, build_cable_gasket, build_cycle,
                     build_gasket, build_path, build_product)

__all__ = ["ConfigError", "parse_sigma", "parse_young", "parse_space", "default_exponents",
           "GridConfig", "RunConfig", "SUITES"]

LOG3_2 = math.log(3) / math.log(2)
LOG5_2 = math.log(5) / math.log(2)

SUITES = (
    "semigroup", "sigma", "orlicz", "pseudo_poincare", "limsup", "ks_equivalence", "cheeger",
    "coarea", "appendix", "truncation", "identities", "isoperimetric", "orlicz_sobolev",
    "continuity", "pseudo_poincare_psi", "embedding", "weak_monotonicity", "var_properties",
    "oscillation", "wbe", "hke", "volume",
)


class ConfigError(ValueError):
    """Invalid configuration; the CLI maps it to exit status 2."""


def _numbers(body: str, what: str) -> list:
    try:
        return [float(x) for x in body.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"malformed {what} parameters: {body!r}") from exc


def parse_sigma(spec: str) -> TwoScaleFn:
    """``"sigma:a,b"`` (or ``"sigma:a"``) to a two-scale function."""
    m = re.fullmatch(r"\s*sigma:(.+)", spec)
    if not m:
        raise ConfigError(f"expected 'sigma:a,b', got {spec!r}")
    v = _numbers(m.group(1), "sigma")
    if len(v) == 1:
        v = v * 2
    if len(v) != 2 or not all(math.isfinite(x) for x in v):
        raise ConfigError(f"sigma needs one or two finite exponents, got {spec!r}")
    return TwoScaleFn(*v)


def parse_young(spec: str) -> YoungFunction:
    """``"power:p"``, ``"minpower:g,k"`` or ``"twoscale:a,b"``."""
    kind, _, body = spec.strip().partition(":")
    v = _numbers(body, kind)
    try:
        if kind == "power" and len(v) == 1:
            return Power(v[0])
        if kind == "minpower" and len(v) == 2:
            return minpower(v[0], v[1])
        if kind == "twoscale" and len(v) == 2:
            return TwoScalePower(v[0], v[1])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown Young function descriptor {spec!r}")


def _split_power(spec: str):
    if "^" in spec:
        base, _, k = spec.rpartition("^")
        try:
            return base, int(k)
        except ValueError as exc:
            raise ConfigError(f"bad product exponent in {spec!r}") from exc
    return spec, 1


def parse_space(spec: str) -> MMSpace:
    """Build a space from ``cycle:n[,len]``, ``path:n[,len]``, ``gasket:L[,blowup]``,
    ``cablegasket:L[,segments]``, any of these followed by ``^k``, or a JSON file path."""
    base, copies = _split_power(spec.strip())
    if base.endswith(".json"):
        p = Path(base)
        if not p.exists():
            raise ConfigError(f"space file {base} not found")
        try:
            X = MMSpace.load(p)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"cannot load space {base}: {exc}") from exc
    else:
        kind, _, body = base.partition(":")
        v = _numbers(body, kind)
        ints = [int(x) for x in v if float(x).is_integer()]
        try:
            if kind == "cycle" and 1 <= len(v) <= 2:
                X = build_cycle(int(v[0]), v[1] if len(v) > 1 else 1.0)
            elif kind == "path" and 1 <= len(v) <= 2:
                X = build_path(int(v[0]), v[1] if len(v) > 1 else 1.0)
            elif kind == "gasket" and 1 <= len(ints) == len(v) <= 2:
                X = build_gasket(ints[0], ints[1] if len(ints) > 1 else 0)
            elif kind == "cablegasket" and 1 <= len(ints) == len(v) <= 2:
                X = build_cable_gasket(ints[0], ints[1] if len(ints) > 1 else 4)
            else:
                raise ConfigError(f"unknown space descriptor {spec!r}")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if copies > 1:
        try:
            X = build_product(X, copies)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        X = _renamed(X, spec.strip())
    return X


def _renamed(X: MMSpace, name: str) -> MMSpace:
    object.__setattr__(X, "name", name)
    return X


def default_exponents(spec: str) -> SpaceExponents:
    """Nominal exponents for the built-in families.

    cycle and path: ``alpha = 1, beta = 2, kappa = 1``; gasket:
    ``alpha = log 3/log 2, beta = log 5/log 2, kappa = beta - alpha``; cable
    gasket: one dimensional below unit scale and gasket-like above it.
    Products multiply ``alpha`` by the number of factors.
    """
    base, copies = _split_power(spec.strip())
    kind = base.partition(":")[0]
    if kind in ("cycle", "path"):
        a, b, k = (1.0, 1.0), (2.0, 2.0), (1.0, 1.0)
    elif kind == "gasket":
        a, b = (LOG3_2, LOG3_2), (LOG5_2, LOG5_2)
        k = (LOG5_2 - LOG3_2,) * 2
    elif kind == "cablegasket":
        a, b = (1.0, LOG3_2), (2.0, LOG5_2)
        k = (1.0, LOG5_2 - LOG3_2)
    else:
        a, b, k = (1.0, 1.0), (2.0, 2.0), (1.0, 1.0)
    return SpaceExponents(a[0] * copies, a[1] * copies, b[0], b[1], k[0], k[1])


@dataclass
class GridConfig:
    """Time grid: ``span`` runs to ``mixing / lambda_1`` at ``per_decade``;
    ``fixed`` uses ``points`` times over ``(points - 1)/10`` decades."""

    mode: str = "span"
    points: int = 30
    per_decade: int = 10
    t_min: Optional[float] = None
    mixing: float = 10.0
    levels: int = 200

    def validate(self):
        if self.mode not in ("span", "fixed"):
            raise ConfigError(f"grid mode must be 'span' or 'fixed', got {self.mode!r}")
        if self.per_decade < 10:
            raise ConfigError("grids need at least 10 points per decade")
        if self.points < 2 or self.levels < 2:
            raise ConfigError("grid sizes must be at least 2")
        if self.t_min is not None and not self.t_min > 0:
            raise ConfigError("t_min must be positive")


@dataclass
class RunConfig:
    space: str = "cycle:64"
    exponents: Optional[dict] = None
    assert_hke: bool = False
    seed: int = 0
    suites: list = field(default_factory=lambda: ["all"])
    out: str = "reports"
    slack: float = 1.05
    exact_tol: float = 1e-9
    grid: GridConfig = field(default_factory=GridConfig)
    besov_p: list = field(default_factory=lambda: [1.0, 2.0])
    besov_h: list = field(default_factory=lambda: ["sigma:0.5,0.5"])
    ks_nu: str = "sigma:0.5,0.5"
    young: str = "power:2"

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("configuration must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        d = dict(d)
        if "grid" in d:
            g = d["grid"]
            if not isinstance(g, dict):
                raise ConfigError("'grid' must be an object")
            gk = {f.name for f in fields(GridConfig)}
            bad = sorted(set(g) - gk)
            if bad:
                raise ConfigError(f"unknown grid keys: {', '.join(bad)}")
            d["grid"] = GridConfig(**g)
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    def resolved_exponents(self) -> SpaceExponents:
        if self.exponents is None:
            return default_exponents(self.space)
        keys = ("alpha1", "alpha2", "beta1", "beta2", "kappa1", "kappa2")
        bad = sorted(set(self.exponents) - set(keys))
        if bad:
            raise ConfigError(f"unknown exponent keys: {', '.join(bad)}")
        base = default_exponents(self.space).as_dict()
        base.update({k: float(v) for k, v in self.exponents.items()})
        try:
            return SpaceExponents(**base)
        except ExponentError as exc:
            raise ConfigError(str(exc)) from exc

    def suite_list(self) -> list:
        out = []
        for s in self.suites:
            if s == "all":
                out.extend(SUITES)
            elif s in SUITES:
                out.append(s)
            else:
                raise ConfigError(f"unknown suite {s!r}; choose from {', '.join(SUITES)} or 'all'")
        seen = set()
        return [s for s in out if not (s in seen or seen.add(s))]

    def validate(self) -> None:
        if not isinstance(self.grid, GridConfig):
            raise ConfigError("grid must be a GridConfig")
        self.grid.validate()
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        if not self.slack >= 1.0:
            raise ConfigError("slack factor must be >= 1")
        if not 0 < self.exact_tol < 1e-3:
            raise ConfigError("exact_tol must lie in (0, 1e-3)")
        for p in self.besov_p:
            if not float(p) >= 1:
                raise ConfigError(f"Besov exponent p={p} must be >= 1")
        for h in self.besov_h:
            f = parse_sigma(h)
            if not f.is_increasing:
                raise ConfigError(f"scaling function {h} must be increasing")
        nu = parse_sigma(self.ks_nu)
        if not nu.is_increasing:
            raise ConfigError("ks_nu must have positive exponents")
        parse_young(self.young)
        self.suite_list()
        exps = self.resolved_exponents()
        if self.assert_hke:
            try:
                exps.validate_hke()
            except ExponentError as exc:
                raise ConfigError(str(exc)) from exc
