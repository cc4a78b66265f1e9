"""Heat-semigroup Besov seminorms, variation, perimeter, co-area and Cheeger estimates.

Everything is computed from the weighted kernel ``W_t(x, y) = mu_x p_t(x, y) mu_y``,
so that with the difference energy

    D_p(f, t) = sum_{x,y} W_t(x, y) |f(x) - f(y)|^p

the h-Besov seminorm is ``sup_t D_p(f, t)^{1/p} / h(t)`` and the variation is
the small-time liminf of ``D_1(f, t) / h(t)``.  Suprema and infima over
``t > 0`` are taken over an explicit :class:`TGrid`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import PchipInterpolator

from .heat import SpectralHeat
from .scale import TwoScaleFn, sigma_eval

__all__ = [
    "TGrid",
    "TabulatedScale",
    "as_scale",
    "scale_descriptor",
    "difference_energy",
    "indicator_energy",
    "besov_profile",
    "besov_seminorm",
    "limsup_characterization_check",
    "pseudo_poincare_check",
    "semigroup_defect",
    "variation",
    "perimeter",
    "level_set",
    "coarea_check",
    "cheeger_candidates",
    "cheeger_estimate",
    "cheeger_lower_bound_check",
    "weak_monotonicity_ratio",
    "var_properties_check",
    "oscillation_check",
    "lp_norm",
    "NormalizationError",
]


class NormalizationError(ValueError):
    """A check that needs ``mu(X) = 1`` was given an unnormalized space."""


# ---------------------------------------------------------------------------
# grids and scaling functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TGrid:
    """Sorted log-spaced times with a designated small-time decade."""

    t: np.ndarray
    small: tuple

    def __post_init__(self):
        t = np.asarray(self.t, float)
        if t.ndim != 1 or t.size < 2 or np.any(t <= 0) or np.any(np.diff(t) <= 0):
            raise ValueError("TGrid needs at least two positive increasing times")
        decades = math.log10(t[-1] / t[0])
        if t.size - 1 < 10 * decades - 1e-9:
            raise ValueError(f"TGrid has {t.size} points over {decades:.2f} decades; need >= 10 per decade")
        object.__setattr__(self, "t", t)
        lo, hi = self.small
        if not np.any((t >= lo * (1 - 1e-12)) & (t <= hi * (1 + 1e-12))):
            raise ValueError("small-time decade contains no grid point")

    @classmethod
    def log(cls, t_min: float, t_max: float, points: Optional[int] = None,
            per_decade: int = 10) -> "TGrid":
        decades = math.log10(t_max / t_min)
        n = points if points is not None else int(math.ceil(decades * per_decade - 1e-9)) + 1
        t = np.logspace(math.log10(t_min), math.log10(t_max), n)
        return cls(t=t, small=(t_min, 10.0 * t_min))

    @classmethod
    def for_heat(cls, H: SpectralHeat, points: int = 30, t_min: Optional[float] = None) -> "TGrid":
        """``points`` log-spaced times from ``(min edge)**2 / 10`` over ``(points - 1)/10`` decades."""
        if t_min is None:
            t_min = H.space.min_edge ** 2 / 10.0
        return cls.log(t_min, t_min * 10 ** ((points - 1) / 10.0), points)

    @classmethod
    def spanning(cls, H: SpectralHeat, per_decade: int = 10, t_min: Optional[float] = None,
                 mixing: float = 10.0) -> "TGrid":
        """From ``(min edge)**2 / 10`` to ``mixing / lambda_1`` at ``per_decade`` points per decade."""
        if t_min is None:
            t_min = H.space.min_edge ** 2 / 10.0
        return cls.log(t_min, max(mixing / H.spectral_gap, 100.0 * t_min), per_decade=per_decade)

    def refined(self, factor: int = 2) -> "TGrid":
        n = (self.t.size - 1) * factor + 1
        t = np.logspace(math.log10(self.t[0]), math.log10(self.t[-1]), n)
        return TGrid(t=t, small=self.small)

    @property
    def small_mask(self) -> np.ndarray:
        lo, hi = self.small
        return (self.t >= lo * (1 - 1e-12)) & (self.t <= hi * (1 + 1e-12))

    def __len__(self) -> int:
        return self.t.size


@dataclass
class TabulatedScale:
    """Monotone scaling function through samples, PCHIP-interpolated in log-log space."""

    t: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.t = np.asarray(self.t, float)
        self.values = np.asarray(self.values, float)
        if np.any(self.t <= 0) or np.any(self.values <= 0):
            raise ValueError("tabulated scale needs positive samples")
        if np.any(np.diff(self.t) <= 0) or np.any(np.diff(self.values) < 0):
            raise ValueError("tabulated scale must be nondecreasing on increasing abscissae")
        self._f = PchipInterpolator(np.log(self.t), np.log(self.values), extrapolate=True)

    def __call__(self, x):
        out = np.exp(self._f(np.log(np.asarray(x, float))))
        return float(out) if np.ndim(out) == 0 else out

    def descriptor(self) -> str:
        return f"tabulated:{self.t.size}"


ScaleLike = Union[TwoScaleFn, TabulatedScale, Callable]


def as_scale(h) -> Callable:
    if isinstance(h, TwoScaleFn):
        return lambda x: sigma_eval(h, x)
    if callable(h):
        return h
    raise TypeError(f"not a scaling function: {h!r}")


def scale_descriptor(h) -> str:
    d = getattr(h, "descriptor", None)
    return d() if callable(d) else repr(h)


def _h_on(h, t: np.ndarray) -> np.ndarray:
    v = np.asarray(as_scale(h)(t), float)
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise ValueError("scaling function must be positive and finite on the grid")
    return v


def _cols(f) -> np.ndarray:
    F = np.asarray(f, float)
    return F[:, None] if F.ndim == 1 else F


# ---------------------------------------------------------------------------
# energies
# ---------------------------------------------------------------------------

def difference_energy(H: SpectralHeat, f, p: float, t: float) -> np.ndarray:
    """``D_p(f, t)`` for each column of ``f``."""
    F = _cols(f)
    W = H.weighted_kernel(t)
    out = np.empty(F.shape[1])
    for j in range(F.shape[1]):
        col = F[:, j]
        D = np.abs(col[:, None] - col[None, :])
        if p != 1:
            D = D ** p
        out[j] = float(np.sum(W * D))
    return out


def indicator_energy(H: SpectralHeat, masks, t: float) -> np.ndarray:
    """``D_1(1_E, t) = 2 sum_{x in E, y not in E} W_t(x, y)`` for columns of boolean ``masks``."""
    S = _cols(masks).astype(float)
    W = H.weighted_kernel(t)
    return 2.0 * np.sum(S * (W @ (1.0 - S)), axis=0)


def energy_table(H: SpectralHeat, f, p: float, ts: Iterable[float]) -> np.ndarray:
    """``(len(ts), k)`` table of ``D_p`` values."""
    return np.stack([difference_energy(H, f, p, float(t)) for t in ts])


@dataclass
class SeminormResult:
    value: np.ndarray
    argmax_t: np.ndarray
    profile: np.ndarray  # (len(grid), k) of D_p^{1/p} / h

    def __getitem__(self, j):
        return float(self.value[j]), float(self.argmax_t[j])


def besov_profile(f, p: float, h, H: SpectralHeat, grid: TGrid, energies=None) -> np.ndarray:
    """``D_p(f, t)^{1/p} / h(t)`` on the grid, one column per field."""
    if p < 1:
        raise ValueError("p must be >= 1")
    E = energy_table(H, f, p, grid.t) if energies is None else energies
    return np.maximum(E, 0.0) ** (1.0 / p) / _h_on(h, grid.t)[:, None]


def besov_seminorm(f, p: float, h, H: SpectralHeat, grid: TGrid):
    """``max_t D_p(f, t)^{1/p} / h(t)`` and the maximizing grid time.

    For a single field returns ``(value, argmax_t)``; for a matrix of fields
    returns a :class:`SeminormResult`.
    """
    prof = besov_profile(f, p, h, H, grid)
    k = np.argmax(prof, axis=0)
    val = prof[k, np.arange(prof.shape[1])]
    arg = grid.t[k]
    if np.ndim(f) == 1:
        return float(val[0]), float(arg[0])
    return SeminormResult(value=val, argmax_t=arg, profile=prof)


def lp_norm(H: SpectralHeat, f, p: float) -> np.ndarray:
    F = _cols(f)
    return (H.mass @ (np.abs(F) ** p)) ** (1.0 / p)


# ---------------------------------------------------------------------------
# lemma checks
# ---------------------------------------------------------------------------

@dataclass
class SlackReport:
    worst_slack: float
    worst_t: float
    worst_probe: int
    slacks: np.ndarray


def limsup_characterization_check(f, p: float, h, H: SpectralHeat, grid: TGrid) -> SlackReport:
    """Check ``||f||_{p,h} <= 2 ||f||_p / h(t) + sup_{s <= t} D_p(f,s)^{1/p}/h(s)`` per grid ``t``.

    Slack is ``(rhs - lhs) / max(lhs, tiny)``; it must be nonnegative.
    """
    prof = besov_profile(f, p, h, H, grid)
    full = prof.max(axis=0)
    running = np.maximum.accumulate(prof, axis=0)
    rhs = 2.0 * lp_norm(H, f, p)[None, :] / _h_on(h, grid.t)[:, None] + running
    scale = np.maximum(full[None, :], np.finfo(float).tiny)
    slack = (rhs - full[None, :]) / scale
    i, j = np.unravel_index(int(np.argmin(slack)), slack.shape)
    return SlackReport(worst_slack=float(slack[i, j]), worst_t=float(grid.t[i]), worst_probe=int(j),
                       slacks=slack)


def _semigroup_increment(H: SpectralHeat, F: np.ndarray, t: float) -> np.ndarray:
    """``P_t f - f = sum_y p_t(x,y) mu_y (f(y) - f(x))`` from the same weighted kernel."""
    W = H.weighted_kernel(t)
    return (W @ F - W.sum(axis=1)[:, None] * F) / H.mass[:, None]


@dataclass
class RatioReport:
    ratio: np.ndarray  # (len(grid), k)
    worst: float
    worst_t: float
    worst_probe: int
    notes: list = field(default_factory=list)


def pseudo_poincare_check(f, p: float, h, H: SpectralHeat, grid: TGrid) -> RatioReport:
    """``||P_t f - f||_p / (h(t) ||f||_{p,h})`` for every grid ``t`` and field.

    This is at most 1 on finite spaces because the seminorm is a supremum
    over the same grid (Jensen on the probability ``p_t(x, .) mu``).
    Constant fields have ratio 0 by convention.
    """
    F = _cols(f)
    prof = besov_profile(F, p, h, H, grid)
    semi = prof.max(axis=0)
    hv = _h_on(h, grid.t)
    R = np.zeros((grid.t.size, F.shape[1]))
    notes = []
    for i, t in enumerate(grid.t):
        num = lp_norm(H, _semigroup_increment(H, F, float(t)), p)
        den = hv[i] * semi
        ok = den > 0
        R[i, ok] = num[ok] / den[ok]
        bad = (~ok) & (num > 1e-12 * np.abs(F).max(axis=0).clip(min=1e-300))
        if np.any(bad):
            notes.append(f"zero seminorm with nonzero increment at t={t:g}")
            R[i, bad] = np.inf
    i, j = np.unravel_index(int(np.argmax(R)), R.shape)
    return RatioReport(ratio=R, worst=float(R[i, j]), worst_t=float(grid.t[i]), worst_probe=int(j), notes=notes)


def semigroup_defect(H: SpectralHeat, F, ts: Sequence[float]) -> dict:
    """Conservativity, symmetry and composition defects over ``ts``."""
    F = _cols(F)
    cons = sym = comp = 0.0
    ts = np.asarray(ts, float)
    for k, t in enumerate(ts):
        P = H.kernel(float(t))
        cons = max(cons, float(np.max(np.abs(P @ H.mass - 1.0))))
        sym = max(sym, float(np.max(np.abs(P - P.T))))
        s = float(ts[(k + 1) % ts.size])
        lhs = H.apply(t + s, F)
        Ps = H.kernel(s)
        # compose through the kernels: P_t P_s f = sum_y p_t(x,y) mu_y (P_s f)(y)
        rhs = P @ (H.mass[:, None] * (Ps @ (H.mass[:, None] * F)))
        comp = max(comp, float(np.max(np.abs(lhs - rhs))))
    return {"conservativity": cons, "symmetry": sym, "composition": comp}


# ---------------------------------------------------------------------------
# variation, perimeter, level sets
# ---------------------------------------------------------------------------

def _small_profile(H, F, h, grid, energies=None):
    m = grid.small_mask
    ts = grid.t[m]
    E = energy_table(H, F, 1.0, ts) if energies is None else energies
    return E / _h_on(h, ts)[:, None], ts


def variation(f, h, H: SpectralHeat, grid: TGrid):
    """Small-time liminf proxy ``min_{t in small decade} D_1(f, t) / h(t)``.

    Returns ``(value, argmin_t)`` for one field, arrays for several.
    """
    prof, ts = _small_profile(H, _cols(f), h, grid)
    k = np.argmin(prof, axis=0)
    val = prof[k, np.arange(prof.shape[1])]
    if np.ndim(f) == 1:
        return float(val[0]), float(ts[k[0]])
    return val, ts[k]


def _indicator_var_and_norm(H, masks, h, grid):
    S = _cols(masks)
    E = np.stack([indicator_energy(H, S, float(t)) for t in grid.t])
    prof = E / _h_on(h, grid.t)[:, None]
    var = prof[grid.small_mask].min(axis=0)
    sup = prof.max(axis=0)
    return var, sup


@dataclass
class PerimeterResult:
    variation: float
    seminorm: float
    note: str = ""


def perimeter(E, h, H: SpectralHeat, grid: TGrid) -> PerimeterResult:
    """Variation of ``1_E`` together with the seminorm ``||1_E||_{1,h}``."""
    E = np.asarray(E, bool)
    if not E.any() or E.all():
        return PerimeterResult(0.0, 0.0, note="empty or full set")
    var, sup = _indicator_var_and_norm(H, E, h, grid)
    return PerimeterResult(float(var[0]), float(sup[0]))


def level_set(f, lam: float) -> np.ndarray:
    """Strict superlevel set ``{f > lam}`` as a boolean mask."""
    return np.asarray(f, float) > lam


@dataclass
class CoareaResult:
    lhs: float
    rhs: float
    ratio: float


def coarea_check(f, h, H: SpectralHeat, grid: TGrid, lam_grid: Optional[np.ndarray] = None,
                 levels: int = 200) -> CoareaResult:
    """``Var(f)`` against ``int_0^max f Var(1_{f > lam}) d lam`` (trapezoid rule).

    ``lam_grid`` defaults to ``levels`` equispaced points on ``[0, max f]``.
    """
    f = np.asarray(f, float)
    if np.any(f < -1e-12):
        raise ValueError("co-area check needs a nonnegative field")
    top = float(f.max())
    if top <= 0:
        return CoareaResult(0.0, 0.0, 0.0)
    lam = np.linspace(0.0, top, levels) if lam_grid is None else np.asarray(lam_grid, float)
    lhs, _ = variation(f, h, H, grid)
    S = f[:, None] > lam[None, :]
    m = grid.small_mask
    ts = grid.t[m]
    E = np.stack([indicator_energy(H, S, float(t)) for t in ts]) / _h_on(h, ts)[:, None]
    per = E.min(axis=0)
    rhs = float(trapezoid(per, lam))
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
    return CoareaResult(lhs=float(lhs), rhs=rhs, ratio=float(ratio))


# ---------------------------------------------------------------------------
# Cheeger constant
# ---------------------------------------------------------------------------

def cheeger_candidates(H: SpectralHeat, seed: int = 0, thresholds: int = 20, n_random: int = 10,
                       exhaustive_arcs: bool = False) -> list:
    """Candidate sets ``(id, mask)``.

    Sublevel sets of the first four nonconstant eigenvectors at
    ``thresholds`` quantiles, balls, seeded random sets and singletons; with
    ``exhaustive_arcs`` every arc of a cycle starting at point 0.
    """
    X = H.space
    n = X.n
    out = []
    for k in range(1, min(5, n)):
        v = H.phi[:, k]
        for j, q in enumerate(np.quantile(v, np.linspace(0.02, 0.5, thresholds))):
            out.append((f"eig{k}<q{j}", v <= q))
    c = X.center_point(X.core_mask())
    centers = sorted({c, 0, int(np.argmax(X.dist[c]))})
    radii = np.geomspace(X.min_distance * 1.5, X.diameter / 2, 10)
    for x in centers:
        for j, r in enumerate(radii):
            out.append((f"ball{x}r{j}", X.dist[x] < r))
    rng = np.random.default_rng(seed)
    for j in range(n_random):
        out.append((f"rand{j}", rng.random(n) < rng.uniform(0.05, 0.45)))
    for x in centers:
        m = np.zeros(n, bool)
        m[x] = True
        out.append((f"point{x}", m))
    if exhaustive_arcs:
        idx = np.arange(n)
        for length in range(1, n):
            out.append((f"arc{length}", idx < length))
    return out


@dataclass
class CheegerResult:
    constant: float
    argmin: str
    table: list  # (id, mass, perimeter, ratio)


def _require_normalized(H: SpectralHeat):
    if abs(H.space.total_mass - 1.0) > 1e-12:
        raise NormalizationError(f"total mass is {H.space.total_mass:.12g}; normalize the space first")


def cheeger_estimate(h, H: SpectralHeat, candidates: Sequence[tuple], grid: TGrid) -> CheegerResult:
    """``min Per_h(E) / mu(E)`` over admissible candidates, ``Per_h(E) = ||1_E||_{1,h}``."""
    _require_normalized(H)
    adm = [(cid, np.asarray(m, bool)) for cid, m in candidates]
    adm = [(cid, m) for cid, m in adm if m.any() and float(H.mass[m].sum()) < 0.5]
    if not adm:
        raise ValueError("no candidate set with 0 < mu(E) < 1/2")
    S = np.stack([m for _, m in adm], axis=1)
    mass = H.mass @ S
    _, per = _indicator_var_and_norm(H, S, h, grid)
    ratio = per / mass
    k = int(np.argmin(ratio))
    table = [(cid, float(mass[j]), float(per[j]), float(ratio[j])) for j, (cid, _) in enumerate(adm)]
    return CheegerResult(constant=float(ratio[k]), argmin=adm[k][0], table=table)


@dataclass
class CheegerBound:
    bound: float
    argmax_t: float
    slack: float
    factor: float
    passed: bool


def cheeger_lower_bound_check(C_hat: float, lambda1: float, h, grid: TGrid,
                              factor: float = 1.05) -> CheegerBound:
    """Compare ``C_hat`` with ``sup_t (1 - exp(-lambda1 t)) / h(t)``.

    ``slack = C_hat - bound``; the check passes when ``factor * C_hat >= bound``.
    """
    vals = -np.expm1(-lambda1 * grid.t) / _h_on(h, grid.t)
    k = int(np.argmax(vals))
    b = float(vals[k])
    return CheegerBound(bound=b, argmax_t=float(grid.t[k]), slack=float(C_hat - b), factor=factor,
                        passed=bool(factor * C_hat >= b))


# ---------------------------------------------------------------------------
# p = 1 layer
# ---------------------------------------------------------------------------

@dataclass
class WeakMonotonicity:
    ratio: float
    seminorm: float
    variation: float
    truncation_ratios: dict
    flagged: bool = False


def weak_monotonicity_ratio(f, psi1, H: SpectralHeat, grid: TGrid,
                            truncations: Sequence[int] = (1, 2, 4, 8)) -> WeakMonotonicity:
    """``||f||_{1,Psi_1} / Var_{Psi_1}(f)``, also on ``(f + n)_+``.

    Constant fields give 0 (0/0 convention).  A nonconstant field with zero
    variation is flagged.
    """
    f = np.asarray(f, float)

    def one(g):
        semi, _ = besov_seminorm(g, 1.0, psi1, H, grid)
        var, _ = variation(g, psi1, H, grid)
        if semi == 0:
            return 0.0, semi, var, False
        if var <= 0:
            return math.inf, semi, var, True
        return semi / var, semi, var, False

    r, s, v, flag = one(f)
    tr = {int(n): one(np.maximum(f + n, 0.0))[0] for n in truncations}
    return WeakMonotonicity(ratio=r, seminorm=s, variation=v, truncation_ratios=tr, flagged=flag)


@dataclass
class VarProperties:
    C: float
    subadditivity_slack: float
    leibniz_slack: float
    var_f: float
    var_g: float
    var_sum: float
    var_prod: float


def var_properties_check(f, g, psi1, H: SpectralHeat, grid: TGrid,
                         C: Optional[float] = None) -> VarProperties:
    """Quasi-subadditivity and the Leibniz bound for the variation.

    ``Var(f+g) <= C (Var f + Var g)`` and
    ``Var(fg) <= C (||g||_inf Var f + ||f||_inf Var g)``.  ``C`` defaults to the
    largest weak-monotonicity ratio of ``f`` and ``g`` (at least 1).  Slacks
    are ``rhs - lhs`` relative to ``rhs``.
    """
    f = np.asarray(f, float)
    g = np.asarray(g, float)
    if C is None:
        C = max(1.0, *(weak_monotonicity_ratio(u, psi1, H, grid, ()).ratio for u in (f, g)))
    vf, _ = variation(f, psi1, H, grid)
    vg, _ = variation(g, psi1, H, grid)
    vs, _ = variation(f + g, psi1, H, grid)
    vp, _ = variation(f * g, psi1, H, grid)
    rhs1 = C * (vf + vg)
    rhs2 = C * (np.abs(g).max() * vf + np.abs(f).max() * vg)

    def rel(rhs, lhs):
        return float((rhs - lhs) / rhs) if rhs > 0 else (0.0 if lhs <= 0 else -math.inf)

    return VarProperties(C=float(C), subadditivity_slack=rel(rhs1, vs), leibniz_slack=rel(rhs2, vp),
                         var_f=vf, var_g=vg, var_sum=vs, var_prod=vp)


@dataclass
class OscillationResult:
    osc: float
    ratio: float
    flagged: bool


def oscillation_check(f, psi1, H: SpectralHeat, grid: TGrid) -> OscillationResult:
    """``Osc(f) = max f - min f`` and its ratio to ``Var_{Psi_1}(f)``."""
    f = np.asarray(f, float)
    osc = float(f.max() - f.min())
    if osc == 0:
        return OscillationResult(0.0, 0.0, False)
    var, _ = variation(f, psi1, H, grid)
    if var <= 0:
        return OscillationResult(osc, math.inf, True)
    return OscillationResult(osc, osc / var, False)
