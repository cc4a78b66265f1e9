"""Young functions, Fenchel conjugation and Orlicz norms on finite measure vectors."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .scale import TwoScaleFn, exact

__all__ = [
    "INF_THRESHOLD",
    "YoungFunction",
    "Power",
    "Threshold",
    "TwoScalePower",
    "minpower",
    "Tabulated",
    "NumericConjugate",
    "young_conjugate",
    "doubling_constant",
    "DoublingReport",
    "doubling_report",
    "MeasureVector",
    "luxembourg_norm",
    "indicator_norm",
    "young_pair_check",
    "generalized_inverse",
]

# values above this are treated as +inf by the numeric conjugate
INF_THRESHOLD = 1e300

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class YoungFunction:
    """Convex nondecreasing ``phi`` on ``[0, inf)`` with ``phi(0) = 0``.

    Subclasses implement ``_eval`` on float arrays.  ``inverse`` is the
    generalized inverse ``sup{s : phi(s) <= y}``.
    """

    def _eval(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, s):
        arr = np.asarray(s, dtype=float)
        if np.any(arr < 0):
            raise ValueError("Young functions are defined on [0, inf)")
        out = self._eval(arr)
        return float(out) if out.ndim == 0 else out

    def inverse(self, y):
        return generalized_inverse(self, y)

    def conjugate(self) -> "YoungFunction":
        return NumericConjugate(self)

    def descriptor(self) -> str:
        return type(self).__name__.lower()

    def __repr__(self) -> str:
        return self.descriptor()


@dataclass(frozen=True, repr=False)
class Power(YoungFunction):
    """``phi(s) = coef * s**p`` with ``p >= 1``."""

    p: float
    coef: float = 1.0

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"power Young function needs p >= 1, got {self.p}")
        if self.coef <= 0:
            raise ValueError("coefficient must be positive")

    def _eval(self, s):
        with np.errstate(over="ignore"):
            return self.coef * np.power(s, self.p)

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        out = np.power(y / self.coef, 1.0 / self.p)
        return float(out) if out.ndim == 0 else out

    def conjugate(self) -> YoungFunction:
        if self.p == 1:
            return Threshold(self.coef)
        q = self.p / (self.p - 1.0)
        c = (self.p - 1.0) / self.p * (self.coef * self.p) ** (-1.0 / (self.p - 1.0))
        return Power(q, c)

    def descriptor(self) -> str:
        if self.coef == 1.0:
            return f"power:{self.p!r}"
        return f"power:{self.p!r}*{self.coef!r}"


@dataclass(frozen=True, repr=False)
class Threshold(YoungFunction):
    """``0`` on ``[0, level]`` and ``+inf`` beyond: the conjugate of ``level * s``."""

    level: float

    def _eval(self, s):
        return np.where(s <= self.level, 0.0, math.inf)

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        out = np.full_like(y, self.level)
        return float(out) if out.ndim == 0 else out

    def conjugate(self) -> YoungFunction:
        return Power(1.0, self.level)

    def descriptor(self) -> str:
        return f"threshold:{self.level!r}"


def _common_tangent(a: float, b: float) -> tuple[float, float, float]:
    """Tangent line to ``s**a`` (left) and ``s**b`` (right), for ``a > b >= 1``.

    Returns ``(slope, s1, s2)``.  For ``b == 1`` the right piece is linear,
    so the minorant follows the unit-slope tangent forever (``s2 = inf``).
    """
    if b == 1.0:
        s1 = a ** (-1.0 / (a - 1.0))
        return 1.0, s1, math.inf
    ka = (a - 1.0) * a ** (-a / (a - 1.0))
    kb = (b - 1.0) * b ** (-b / (b - 1.0))
    ea, eb = a / (a - 1.0), b / (b - 1.0)
    m = (ka / kb) ** (1.0 / (eb - ea))
    return m, (m / a) ** (1.0 / (a - 1.0)), (m / b) ** (1.0 / (b - 1.0))


@dataclass(frozen=True, repr=False)
class TwoScalePower(YoungFunction):
    """Young function built from ``sigma_{a,b}``: ``s**a`` on ``[0,1]``, ``s**b`` beyond.

    ``sigma_{a,b}`` is convex when ``a <= b``.  For ``a > b`` it is not, and
    the greatest convex minorant is used instead: the two power pieces joined
    by their common tangent.  ``adjustment`` is the largest pointwise gap
    between ``sigma_{a,b}`` and the function actually evaluated.
    """

    a: float
    b: float

    def __post_init__(self):
        if self.a < 1 or self.b < 1:
            raise ValueError(f"two-scale Young function needs exponents >= 1, got ({self.a}, {self.b})")

    @property
    def sigma(self) -> TwoScaleFn:
        return TwoScaleFn(self.a, self.b)

    @property
    def convexified(self) -> bool:
        return self.a > self.b

    def _tangent(self):
        return _common_tangent(float(self.a), float(self.b))

    def _eval(self, s):
        a, b = float(self.a), float(self.b)
        with np.errstate(over="ignore"):
            raw = np.where(s <= 1.0, np.power(s, a), np.power(s, b))
            if not self.convexified:
                return raw
            m, s1, s2 = self._tangent()
            line = s1 ** a + m * (s - s1)
            return np.where((s > s1) & (s < s2), line, raw)

    @property
    def adjustment(self) -> float:
        if not self.convexified:
            return 0.0
        # the gap is maximal at the kink s = 1
        m, s1, _ = self._tangent()
        return float(1.0 - (s1 ** float(self.a) + m * (1.0 - s1)))

    def inverse(self, y):
        if self.convexified:
            return generalized_inverse(self, y)
        return self.sigma.inverse()(y)

    def descriptor(self) -> str:
        return f"twoscale:{float(self.a)!r},{float(self.b)!r}"


def minpower(gamma: float, kappa: float) -> TwoScalePower:
    """``s**gamma ∧ s**kappa`` for ``1 <= gamma <= kappa``, convexified.

    The minimum is ``s**kappa`` on ``[0,1]`` and ``s**gamma`` beyond, which is
    ``sigma_{kappa, gamma}``; for ``gamma < kappa`` it is concave across the
    kink, so its greatest convex minorant is what is returned.
    """
    if not 1 <= gamma <= kappa:
        raise ValueError(f"minpower needs 1 <= gamma <= kappa, got ({gamma}, {kappa})")
    return _MinPower(kappa, gamma)


@dataclass(frozen=True, repr=False)
class _MinPower(TwoScalePower):
    def descriptor(self) -> str:
        return f"minpower:{float(self.b)!r},{float(self.a)!r}"


@dataclass(repr=False)
class Tabulated(YoungFunction):
    """Piecewise-linear Young function through samples, convexified by lower hull.

    ``(0, 0)`` is prepended; beyond the last sample the last slope is kept.
    """

    s: np.ndarray
    values: np.ndarray
    adjustment: float = field(init=False)

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if s.shape != v.shape or s.ndim != 1 or s.size < 2:
            raise ValueError("need matching 1-d sample arrays with at least two points")
        if np.any(s < 0) or np.any(np.diff(s) <= 0):
            raise ValueError("sample abscissae must be nonnegative and strictly increasing")
        if s[0] > 0:
            s = np.concatenate([[0.0], s])
            v = np.concatenate([[0.0], v])
        v = v - v[0]
        hull = _lower_hull(s, v)
        hs, hv = s[hull], v[hull]
        hull_vals = np.interp(s, hs, hv)
        self.adjustment = float(np.max(v - hull_vals))
        self._s, self._v = hs, hv
        self._slope = (hv[-1] - hv[-2]) / (hs[-1] - hs[-2])
        if self._slope < 0 or np.any(np.diff(hv) < -1e-15):
            raise ValueError("samples are not nondecreasing after convexification")
        self.s, self.values = s, v

    def _eval(self, x):
        out = np.interp(x, self._s, self._v)
        beyond = x > self._s[-1]
        return np.where(beyond, self._v[-1] + self._slope * (x - self._s[-1]), out)

    def descriptor(self) -> str:
        return f"tabulated:{self.s.size}"


def _lower_hull(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    hull: list[int] = []
    for i in range(x.size):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            cross = (x[i1] - x[i0]) * (y[i] - y[i0]) - (y[i1] - y[i0]) * (x[i] - x[i0])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.array(hull)


# ---------------------------------------------------------------------------
# conjugation
# ---------------------------------------------------------------------------

def _log_grid(lo: float, hi: float, per_decade: int) -> np.ndarray:
    n = max(2, int(round(math.log10(hi / lo) * per_decade)) + 1)
    return np.logspace(math.log10(lo), math.log10(hi), n)


def _conjugate_values(phi: YoungFunction, t: np.ndarray, per_decade: int = 400,
                      lo: float = 1e-4, hi: float = 1e4, tol: float = 1e-10) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    # s -> st - phi(s) is concave, so a scan plus local refinement is enough
    for start in range(0, t.size, 256):
        chunk = t[start:start + 256]
        out[start:start + 256] = _conjugate_chunk(phi, chunk, per_decade, lo, hi, tol)
    return out


def _conjugate_chunk(phi, t, per_decade, lo, hi, tol):
    res = np.zeros_like(t)
    s = _log_grid(lo, hi, per_decade)
    ps = phi(s)
    g = t[:, None] * s[None, :] - ps[None, :]
    g = np.where(np.isnan(g), -np.inf, g)
    k = np.argmax(g, axis=1)
    rows = np.arange(k.size)
    best = g[rows, k]
    last = s.size - 1
    edge_tol = 1e-9 * np.maximum(1.0, np.abs(best))
    # an edge maximum only counts as escaping when it beats its neighbour
    # by more than roundoff
    rising_hi = (k == last) & (best - g[:, last - 1] > edge_tol)
    rising_lo = (k == 0) & (best - g[:, 1] > edge_tol) & (t > 0)
    interior = ~(rising_hi | rising_lo)

    if np.any(interior):
        kk = np.clip(k[interior], 1, last - 1)
        refined = _golden_max(phi, t[interior], s[kk - 1], s[kk + 1], tol)
        res[interior] = np.maximum(np.maximum(refined, best[interior]), 0.0)
    if np.any(rising_hi):
        if hi >= INF_THRESHOLD:
            res[rising_hi] = math.inf
        else:
            res[rising_hi] = _conjugate_chunk(phi, t[rising_hi], per_decade,
                                              hi / 10.0, min(hi * 1e8, INF_THRESHOLD), tol)
    if np.any(rising_lo):
        if lo <= 1e-300:
            res[rising_lo] = np.maximum(best[rising_lo], 0.0)
        else:
            res[rising_lo] = _conjugate_chunk(phi, t[rising_lo], per_decade,
                                              max(lo / 1e8, 1e-300), lo * 10.0, tol)
    return res


def _golden_max(phi, t, a, b, tol):
    a = a.copy()
    b = b.copy()
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc = t * c - phi(c)
    fd = t * d - phi(d)
    for _ in range(200):
        if np.all(b - a <= tol * b):
            break
        left = fc > fd
        # keep [a, d] when the left probe wins, else [c, b]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        c = b - _GOLDEN * (b - a)
        d = a + _GOLDEN * (b - a)
        fc = t * c - phi(c)
        fd = t * d - phi(d)
    m = 0.5 * (a + b)
    return np.maximum(t * m - phi(m), np.maximum(fc, fd))


def young_conjugate(phi: YoungFunction, t, per_decade: int = 400):
    """``sup_{s>0} (s t - phi(s))``, possibly ``inf``.

    Log-grid scan over ``s`` starting on ``[1e-4, 1e4]`` with window
    extension when the maximizer sits at an edge, followed by golden-section
    refinement.  The sentinel ``math.inf`` is returned once the objective is
    still increasing at ``s = 1e300``.
    """
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise ValueError("t must be nonnegative")
    out = _conjugate_values(phi, arr.ravel(), per_decade).reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, repr=False)
class NumericConjugate(YoungFunction):
    """Young conjugate computed numerically at each evaluation."""

    base: YoungFunction
    per_decade: int = 400

    def _eval(self, t):
        return _conjugate_values(self.base, np.atleast_1d(t).ravel(), self.per_decade).reshape(t.shape)

    def conjugate(self) -> YoungFunction:
        return NumericConjugate(self, self.per_decade)

    def descriptor(self) -> str:
        return f"conj({self.base.descriptor()})"


def generalized_inverse(phi: YoungFunction, y, rtol: float = 1e-12):
    """``sup{s >= 0 : phi(s) <= y}`` by bracketing and geometric bisection.

    All targets are bisected together, one vectorized ``phi`` call per step.
    """
    ys = np.atleast_1d(np.asarray(y, dtype=float)).ravel()
    if np.any(ys < 0) or np.any(np.isnan(ys)):
        raise ValueError("y must be nonnegative")
    out = np.empty_like(ys)
    live = np.isfinite(ys)
    out[~live] = math.inf
    idx = np.flatnonzero(live)
    if idx.size:
        out[idx] = _inverse_vector(phi, ys[idx], rtol)
    return float(out[0]) if np.ndim(y) == 0 else out.reshape(np.shape(y))


def _inverse_vector(phi, y, rtol):
    hi = np.ones_like(y)
    res = np.full_like(y, math.nan)
    # grow hi until phi(hi) > y
    up = np.asarray(phi(hi)) <= y
    while np.any(up):
        hi[up] *= 2.0
        over = up & (hi > INF_THRESHOLD)
        res[over] = math.inf
        up &= ~over
        up[up] = np.asarray(phi(hi[up])) <= y[up]
    lo = hi / 2.0
    down = np.isnan(res) & (np.asarray(phi(lo)) > y)
    while np.any(down):
        lo[down] /= 2.0
        under = down & (lo < 1e-300)
        res[under] = 0.0
        down &= ~under
        down[down] = np.asarray(phi(lo[down])) > y[down]
    hi = np.where(lo * 2.0 < hi, lo * 2.0, hi)
    act = np.isnan(res)
    # phi(lo) <= y < phi(hi) on active entries
    while True:
        act &= (hi - lo) > rtol * hi
        if not np.any(act):
            break
        mid = 0.5 * (lo[act] + hi[act])
        ok = np.asarray(phi(mid)) <= y[act]
        a = np.flatnonzero(act)
        lo[a[ok]] = mid[ok]
        hi[a[~ok]] = mid[~ok]
    done = np.isnan(res)
    res[done] = lo[done]
    return res


@dataclass
class DoublingReport:
    constant: float
    worst_s: float
    trend: np.ndarray
    growing: bool


def doubling_report(phi: YoungFunction, grid: Sequence[float]) -> DoublingReport:
    """``sup phi(2s)/phi(s)`` over ``grid`` plus a running-max trend across it.

    ``growing`` flags a running maximum still increasing over the last quarter
    of the grid, the signature of a non-doubling function.
    """
    s = np.asarray(grid, dtype=float)
    if np.any(s <= 0):
        raise ValueError("grid must be positive")
    s = np.sort(s)
    v = phi(s)
    if np.any(v <= 0):
        raise ValueError("phi vanishes on part of the grid")
    ratio = phi(2.0 * s) / v
    running = np.maximum.accumulate(ratio)
    q = max(1, s.size // 4)
    tail = running[-q:]
    growing = bool(tail[-1] > tail[0] * (1 + 1e-6) and np.all(np.diff(ratio[-q:]) > 0))
    k = int(np.argmax(ratio))
    return DoublingReport(constant=float(ratio[k]), worst_s=float(s[k]), trend=running, growing=growing)


def doubling_constant(phi: YoungFunction, grid: Sequence[float]) -> float:
    """``sup_s phi(2s)/phi(s)`` over a positive grid."""
    return doubling_report(phi, grid).constant


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

@dataclass
class MeasureVector:
    """Values ``f_i`` with strictly positive masses ``mu_i``."""

    values: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.masses = np.asarray(self.masses, dtype=float)
        if self.values.shape != self.masses.shape:
            raise ValueError("values and masses must have the same shape")
        if np.any(self.masses <= 0) or not np.all(np.isfinite(self.masses)):
            raise ValueError("masses must be finite and strictly positive")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def scaled(self, c: float) -> "MeasureVector":
        return MeasureVector(c * self.values, self.masses)


def luxembourg_norm(f: MeasureVector, phi: YoungFunction, rtol: float = 1e-10) -> float:
    """``inf{s > 0 : sum phi(|f_i|/s) mu_i <= 1}`` by geometric bisection."""
    a = np.abs(f.values)
    top = float(a.max()) if a.size else 0.0
    if top == 0.0:
        return 0.0
    # work with f/top so tiny or huge inputs cannot under- or overflow the bracket
    a = a / top
    w = f.masses

    def modular(s):
        return float(np.sum(phi(a / s) * w))

    hi = 1.0
    while modular(hi) > 1.0:
        hi *= 2.0
    lo = hi
    while modular(lo) <= 1.0:
        lo /= 2.0
        if lo < 1e-300:
            return 0.0
    while hi / lo - 1.0 > rtol:
        mid = math.sqrt(lo * hi)
        if modular(mid) <= 1.0:
            hi = mid
        else:
            lo = mid
    return hi * top


def indicator_norm(mass: float, psi: YoungFunction) -> float:
    """Duality norm of an indicator: ``mass * psi^{-1}(1/mass)``."""
    if not (mass > 0 and math.isfinite(mass)):
        raise ValueError("mass must be positive and finite")
    y = 1.0 / mass
    inv = psi.inverse(y)
    if not math.isfinite(inv):
        raise ValueError(f"{psi.descriptor()} stays below {y:g} on its sampled range")
    return mass * float(inv)


@dataclass
class PairCheck:
    lower_slack: float
    upper_slack: float
    worst_s: float

    @property
    def holds(self) -> bool:
        return self.lower_slack >= 0 and self.upper_slack >= 0

    @property
    def max_defect(self) -> float:
        return max(0.0, -self.lower_slack, -self.upper_slack)


def young_pair_check(phi: YoungFunction, psi: YoungFunction, grid: Sequence[float]) -> PairCheck:
    """Check ``s <= phi^{-1}(s) psi^{-1}(s) <= 2 s`` on a positive grid.

    Slacks are relative: ``prod/s - 1`` and ``2 - prod/s``.
    """
    s = np.asarray(grid, dtype=float)
    if np.any(s <= 0):
        raise ValueError("grid must be positive")
    prod = np.atleast_1d(phi.inverse(s)) * np.atleast_1d(psi.inverse(s))
    r = prod / s
    lower = r - 1.0
    upper = 2.0 - r
    k = int(np.argmin(np.minimum(lower, upper)))
    return PairCheck(lower_slack=float(lower.min()), upper_slack=float(upper.min()), worst_s=float(s[k]))
